//! Fixtures shared by the criterion benches.

use intramix_core::dataset::{generate_sbm, make_split, SbmConfig};
use intramix_core::experiment::Dataset;

/// Block-model dataset with `per_class` nodes in each of five classes.
/// Every node keeps its true label, so all of them count as high quality
/// when fed straight to the augmentation step.
pub fn block_model(per_class: usize) -> Dataset {
    let cfg =
        SbmConfig { nodes_per_class: per_class, p_intra: 6.0 / per_class as f64, seed: 7, ..SbmConfig::default() };
    let d = generate_sbm(&cfg).expect("valid benchmark settings");
    let split = make_split(&d.table, 5, per_class, 7).expect("enough nodes for the split");
    Dataset::from_synthetic(d, split).expect("split fits graph")
}
