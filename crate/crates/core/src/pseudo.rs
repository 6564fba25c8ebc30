//! Pseudo-labeling and the dropout-consistency ensemble that certifies a
//! high-quality subset of labels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{NodeTable, Provenance};
use crate::error::{Error, Result};
use crate::gnn::{predict, ModelParams};
use crate::graph::NormalizedAdjacency;
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub dropout_probs: Vec<f64>,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { dropout_probs: vec![0.3, 0.4, 0.5, 0.6, 0.7], seed: 0 }
    }
}

impl EnsembleConfig {
    pub const MAX_MEMBERS: usize = 16;

    pub fn validate(&self) -> Result<()> {
        let n = self.dropout_probs.len();
        if n == 0 || n > Self::MAX_MEMBERS {
            return Err(Error::InvalidConfig(format!("ensemble size {n} outside 1..={}", Self::MAX_MEMBERS)));
        }
        for (k, &p) in self.dropout_probs.iter().enumerate() {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("dropout probability {p} outside [0, 1)")));
            }
            if self.dropout_probs[..k].contains(&p) {
                return Err(Error::InvalidConfig(format!("dropout probability {p} listed twice")));
            }
        }
        Ok(())
    }
}

/// Labels every unlabeled node with the model's dropout-free prediction and
/// tags it pseudo. Labeled nodes are left alone.
pub fn assign_pseudo_labels(
    model: &ModelParams,
    adjacency: &NormalizedAdjacency,
    table: &NodeTable,
) -> Result<NodeTable> {
    let mut out = table.clone();
    let unlabeled = table.nodes_with(Provenance::Unlabeled);
    if unlabeled.is_empty() {
        return Ok(out);
    }
    let pred = predict(model, adjacency, table.features(), 0.0, &mut SeedStream::new(0))?;
    for i in unlabeled {
        out.set_label(i, pred[i], Provenance::Pseudo);
    }
    Ok(out)
}

/// Re-tags as high-quality every pseudo-labeled node whose prediction under
/// each ensemble dropout rate equals its stored label. Labels are never
/// changed; gold nodes count as high-quality without re-tagging.
///
/// Member `k` draws its dropout masks from a stream keyed by its dropout
/// rate, so adding members can only shrink the selected set.
pub fn select_high_quality(
    model: &ModelParams,
    adjacency: &NormalizedAdjacency,
    table: &NodeTable,
    cfg: &EnsembleConfig,
) -> Result<NodeTable> {
    cfg.validate()?;
    let root = SeedStream::new(cfg.seed);
    let predictions: Vec<Vec<usize>> = cfg
        .dropout_probs
        .par_iter()
        .map(|&p| {
            let mut rng = root.split(p.to_bits());
            predict(model, adjacency, table.features(), p, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut out = table.clone();
    for i in 0..table.num_nodes() {
        let tag = table.provenance(i);
        if !matches!(tag, Provenance::Pseudo | Provenance::HighQuality) {
            continue;
        }
        let label = table.label(i).expect("pseudo nodes carry labels");
        let consistent = predictions.iter().all(|pred| pred[i] == label);
        out.set_tag(i, if consistent { Provenance::HighQuality } else { Provenance::Pseudo });
    }
    Ok(out)
}

/// Flips each pseudo (or high-quality) label with probability `rate` to a
/// uniformly chosen different class. Used to study how mixup treats noisy
/// labels.
pub fn inject_label_noise(table: &NodeTable, rate: f64, seed: u64) -> Result<NodeTable> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!("noise rate {rate} outside [0, 1]")));
    }
    let classes = table.num_classes();
    let mut rng = SeedStream::new(seed).split_named("label-noise");
    let mut out = table.clone();
    for i in 0..table.num_nodes() {
        let tag = table.provenance(i);
        if !matches!(tag, Provenance::Pseudo | Provenance::HighQuality) || classes < 2 {
            continue;
        }
        if rng.uniform() < rate {
            let old = table.label(i).expect("labeled");
            let mut new = rng.below(classes - 1);
            if new >= old {
                new += 1;
            }
            out.set_label(i, new, tag);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::Layer;
    use crate::graph::Graph;
    use ndarray::{array, Array2};

    /// One-layer model whose logits are `Â·x` for class 0 and `-Â·x` for
    /// class 1.
    fn sign_model() -> ModelParams {
        ModelParams { layers: vec![Layer { weight: array![[1.0, -1.0]], bias: array![0.0, 0.0] }] }
    }

    fn setup() -> (NormalizedAdjacency, NodeTable) {
        let g = Graph::build(4, &[(0, 1), (2, 3)]).unwrap();
        let x = array![[2.0], [1.0], [-1.0], [-3.0]];
        let t = NodeTable::new(x, vec![Some(0), None, None, None], 2).unwrap();
        (g.normalized_adjacency(), t)
    }

    #[test]
    fn pseudo_labels_fill_unlabeled_only() {
        let (a, t) = setup();
        let p = assign_pseudo_labels(&sign_model(), &a, &t).unwrap();
        assert_eq!(p.labels(), &[Some(0), Some(0), Some(1), Some(1)]);
        assert_eq!(p.provenance(0), Provenance::Gold);
        assert_eq!(p.count(Provenance::Pseudo), 3);
    }

    #[test]
    fn fully_labeled_table_unchanged() {
        let (a, _) = setup();
        let t = NodeTable::new(array![[1.0], [2.0], [3.0], [4.0]], vec![Some(0); 4], 2).unwrap();
        assert_eq!(assign_pseudo_labels(&sign_model(), &a, &t).unwrap(), t);
    }

    #[test]
    fn all_unlabeled_becomes_pseudo() {
        let (a, _) = setup();
        let t = NodeTable::new(Array2::ones((4, 1)), vec![None; 4], 2).unwrap();
        let p = assign_pseudo_labels(&sign_model(), &a, &t).unwrap();
        assert_eq!(p.count(Provenance::Pseudo), 4);
        assert_eq!(p.count(Provenance::Gold), 0);
    }

    #[test]
    fn deterministic_ensemble_matches_plain_prediction() {
        let (a, t) = setup();
        let mut p = assign_pseudo_labels(&sign_model(), &a, &t).unwrap();
        p.set_label(3, 0, Provenance::Pseudo);
        let cfg = EnsembleConfig { dropout_probs: vec![0.0], seed: 1 };
        let h = select_high_quality(&sign_model(), &a, &p, &cfg).unwrap();
        assert_eq!(h.provenance(1), Provenance::HighQuality);
        assert_eq!(h.provenance(2), Provenance::HighQuality);
        assert_eq!(h.provenance(3), Provenance::Pseudo);
        assert_eq!(h.provenance(0), Provenance::Gold);
        assert!(h.is_high_quality(0));
        assert_eq!(h.labels(), p.labels());
    }

    #[test]
    fn ensemble_config_validation() {
        assert!(EnsembleConfig { dropout_probs: vec![], seed: 0 }.validate().is_err());
        assert!(EnsembleConfig { dropout_probs: vec![0.2, 0.2], seed: 0 }.validate().is_err());
        assert!(EnsembleConfig { dropout_probs: vec![1.0], seed: 0 }.validate().is_err());
        assert!(EnsembleConfig { dropout_probs: vec![0.1; 17], seed: 0 }.validate().is_err());
        EnsembleConfig::default().validate().unwrap();
    }

    #[test]
    fn noise_injection_flips_at_rate() {
        let n = 4000;
        let t = NodeTable::new(Array2::zeros((n, 1)), vec![None; n], 5).unwrap();
        let mut p = t.clone();
        for i in 0..n {
            p.set_label(i, i % 5, Provenance::Pseudo);
        }
        let noisy = inject_label_noise(&p, 0.2, 3).unwrap();
        let flipped = (0..n).filter(|&i| noisy.label(i) != p.label(i)).count() as f64 / n as f64;
        assert!((flipped - 0.2).abs() < 0.03, "{flipped}");
    }
}
