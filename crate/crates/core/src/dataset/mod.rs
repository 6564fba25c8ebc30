//! Node tables, synthetic block-model data, semi-supervised splits and the
//! on-disk container format.

mod container;
mod sbm;
mod split;
mod table;

pub use container::{load_container, save_container, Container, ContainerMeta};
pub use sbm::{generate_sbm, SbmConfig, SyntheticDataset};
pub use split::{make_split, SplitMasks};
pub use table::{NodeTable, Provenance};
