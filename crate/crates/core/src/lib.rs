//! Intra-class mixup augmentation for semi-supervised node classification.
//!
//! The crate bundles everything the augmentation pipeline touches: sparse
//! graphs ([`graph`]), datasets and splits ([`dataset`]), a two-layer GCN
//! trained from scratch ([`gnn`]), pseudo-labeling with a dropout ensemble
//! ([`pseudo`]), the augmentation itself and its ablations ([`augment`]),
//! Monte-Carlo checks of the noise-reduction results ([`theory`]),
//! evaluation metrics ([`metrics`]) and the experiment drivers used by the
//! command-line tool ([`experiment`]).

pub mod augment;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod gnn;
pub mod graph;
pub mod metrics;
pub mod pseudo;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{Graph, NormalizedAdjacency};
pub use rng::SeedStream;
