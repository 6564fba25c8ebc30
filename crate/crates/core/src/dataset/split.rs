use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{NodeTable, Provenance};
use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Disjoint train / validation / test index sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitMasks {
    pub fn validate(&self, num_original: usize) -> Result<()> {
        let mut seen = vec![false; num_original];
        for (name, set) in [("train", &self.train), ("validation", &self.validation), ("test", &self.test)] {
            for &i in set {
                if i >= num_original {
                    return Err(Error::InvalidConfig(format!("{name} index {i} exceeds {num_original} nodes")));
                }
                if seen[i] {
                    return Err(Error::InvalidConfig(format!("node {i} appears in more than one split")));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// Draws `labels_per_class` training nodes per class from the gold-labeled
/// nodes, then `val_size` validation nodes from what remains; all other gold
/// nodes form the test set.
pub fn make_split(table: &NodeTable, labels_per_class: usize, val_size: usize, seed: u64) -> Result<SplitMasks> {
    if labels_per_class == 0 {
        return Err(Error::InvalidConfig("labels_per_class must be positive".into()));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = (0..table.num_classes()).map(|c| (c, Vec::new())).collect();
    for i in table.nodes_with(Provenance::Gold) {
        if let Some(c) = table.label(i) {
            by_class.entry(c).or_default().push(i);
        }
    }
    let root = SeedStream::new(seed);
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for (&class, nodes) in by_class.iter_mut() {
        if nodes.len() < labels_per_class {
            return Err(Error::InsufficientClass { class, available: nodes.len(), required: labels_per_class });
        }
        nodes.shuffle(&mut root.split(class as u64));
        train.extend_from_slice(&nodes[..labels_per_class]);
        rest.extend_from_slice(&nodes[labels_per_class..]);
    }
    if val_size > rest.len() {
        return Err(Error::InvalidConfig(format!(
            "validation size {val_size} exceeds the {} nodes left after training selection",
            rest.len()
        )));
    }
    rest.sort_unstable();
    rest.shuffle(&mut root.split_named("validation"));
    let mut validation = rest[..val_size].to_vec();
    let mut test = rest[val_size..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(SplitMasks { train, validation, test })
}
