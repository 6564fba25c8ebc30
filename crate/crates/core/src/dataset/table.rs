use ndarray::{s, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a node's label came from. Subsets of the node set used by the
/// augmentation pipeline are defined by these tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Gold,
    Unlabeled,
    Pseudo,
    HighQuality,
    Generated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    features: Array2<f64>,
    labels: Vec<Option<usize>>,
    provenance: Vec<Provenance>,
    num_classes: usize,
}

impl NodeTable {
    /// Nodes with a label are tagged gold, the rest unlabeled.
    pub fn new(features: Array2<f64>, labels: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        let provenance = labels
            .iter()
            .map(|l| match l {
                Some(_) => Provenance::Gold,
                None => Provenance::Unlabeled,
            })
            .collect();
        let table = Self { features, labels, provenance, num_classes };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.nrows() != self.labels.len() || self.labels.len() != self.provenance.len() {
            return Err(Error::DimensionMismatch {
                context: "node table rows",
                expected: self.features.nrows(),
                found: self.labels.len(),
            });
        }
        for (i, (label, tag)) in self.labels.iter().zip(&self.provenance).enumerate() {
            match (label, tag) {
                (None, Provenance::Unlabeled) => {}
                (Some(c), t) if *t != Provenance::Unlabeled => {
                    if *c >= self.num_classes {
                        return Err(Error::InvalidConfig(format!(
                            "node {i} has label {c} but only {} classes exist",
                            self.num_classes
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "node {i}: tag {tag:?} inconsistent with label {label:?}"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn feature_row(&self, node: usize) -> ArrayView1<'_, f64> {
        self.features.row(node)
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    pub fn provenance(&self, node: usize) -> Provenance {
        self.provenance[node]
    }

    pub fn provenances(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn is_labeled(&self, node: usize) -> bool {
        self.labels[node].is_some()
    }

    /// Membership in the high-quality set: certified pseudo-labels plus every
    /// gold node.
    pub fn is_high_quality(&self, node: usize) -> bool {
        matches!(self.provenance[node], Provenance::HighQuality | Provenance::Gold)
    }

    pub fn nodes_with(&self, tag: Provenance) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| self.provenance[i] == tag).collect()
    }

    pub fn count(&self, tag: Provenance) -> usize {
        self.provenance.iter().filter(|&&t| t == tag).count()
    }

    /// Keeps gold labels only on `keep`; every other node becomes unlabeled.
    pub fn masked_to(&self, keep: &[usize]) -> NodeTable {
        let mut labels = vec![None; self.num_nodes()];
        let mut provenance = vec![Provenance::Unlabeled; self.num_nodes()];
        for &i in keep {
            if let Some(c) = self.labels[i] {
                labels[i] = Some(c);
                provenance[i] = self.provenance[i];
            }
        }
        NodeTable { features: self.features.clone(), labels, provenance, num_classes: self.num_classes }
    }

    pub(crate) fn set_label(&mut self, node: usize, label: usize, tag: Provenance) {
        debug_assert!(label < self.num_classes);
        self.labels[node] = Some(label);
        self.provenance[node] = tag;
    }

    pub(crate) fn set_tag(&mut self, node: usize, tag: Provenance) {
        debug_assert!(self.labels[node].is_some());
        self.provenance[node] = tag;
    }

    /// Appends generated nodes after the existing ones.
    pub fn with_generated(&self, features: ArrayView2<f64>, labels: &[usize]) -> Result<NodeTable> {
        if features.ncols() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                context: "generated feature width",
                expected: self.feature_dim(),
                found: features.ncols(),
            });
        }
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "generated label count",
                expected: features.nrows(),
                found: labels.len(),
            });
        }
        let n = self.num_nodes();
        let mut all = Array2::zeros((n + labels.len(), self.feature_dim()));
        all.slice_mut(s![..n, ..]).assign(&self.features);
        all.slice_mut(s![n.., ..]).assign(&features);
        let mut table = NodeTable {
            features: all,
            labels: self.labels.clone(),
            provenance: self.provenance.clone(),
            num_classes: self.num_classes,
        };
        table.labels.extend(labels.iter().map(|&c| Some(c)));
        table.provenance.extend(std::iter::repeat_n(Provenance::Generated, labels.len()));
        table.validate()?;
        Ok(table)
    }
}
