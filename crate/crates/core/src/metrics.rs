//! Accuracy and the MADGap over-smoothing measure.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, HopClasses};

/// Fraction of `mask` nodes whose prediction equals their ground truth.
pub fn accuracy(predictions: &[usize], truth: &[Option<usize>], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("accuracy"));
    }
    let mut hits = 0usize;
    for &i in mask {
        let Some(t) = truth.get(i).copied().flatten() else {
            return Err(Error::InvalidConfig(format!("node {i} has no ground-truth label")));
        };
        if predictions[i] == t {
            hits += 1;
        }
    }
    Ok(hits as f64 / mask.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MadGapConfig {
    pub near_max_hops: usize,
    pub far_min_hops: usize,
}

impl Default for MadGapConfig {
    fn default() -> Self {
        Self { near_max_hops: 2, far_min_hops: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadGap {
    pub value: f64,
    pub near_mean: f64,
    pub far_mean: f64,
    pub near_pairs: usize,
    pub far_pairs: usize,
    /// Nodes left out because their embedding row is all zeros.
    pub zero_norm_nodes: Vec<usize>,
}

/// Mean cosine distance over far pairs minus mean over near pairs.
pub fn madgap(embeddings: ArrayView2<f64>, graph: &Graph, cfg: &MadGapConfig) -> Result<MadGap> {
    if embeddings.nrows() != graph.num_nodes() {
        return Err(Error::DimensionMismatch {
            context: "embedding rows vs graph nodes",
            expected: graph.num_nodes(),
            found: embeddings.nrows(),
        });
    }
    let classes = graph.hop_distance_classes(cfg.near_max_hops, cfg.far_min_hops)?;
    madgap_with_pairs(embeddings, &classes)
}

pub fn madgap_with_pairs(embeddings: ArrayView2<f64>, classes: &HopClasses) -> Result<MadGap> {
    let norms: Vec<f64> = embeddings.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let zero_norm_nodes: Vec<usize> = (0..norms.len()).filter(|&i| norms[i] == 0.0).collect();
    let mean_distance = |pairs: &[(usize, usize)]| -> (f64, usize) {
        let partials: Vec<(f64, usize)> = pairs
            .par_chunks(4096)
            .map(|chunk| {
                chunk.iter().filter(|&&(i, j)| norms[i] > 0.0 && norms[j] > 0.0).fold(
                    (0.0, 0usize),
                    |(s, c), &(i, j)| {
                        let cos = embeddings.row(i).dot(&embeddings.row(j)) / (norms[i] * norms[j]);
                        (s + (1.0 - cos), c + 1)
                    },
                )
            })
            .collect();
        let (sum, count) = partials.iter().fold((0.0, 0), |(s, c), &(ps, pc)| (s + ps, c + pc));
        (if count > 0 { sum / count as f64 } else { 0.0 }, count)
    };
    let (near_mean, near_pairs) = mean_distance(&classes.near);
    let (far_mean, far_pairs) = mean_distance(&classes.far);
    if near_pairs == 0 {
        return Err(Error::NoValidPairs("near"));
    }
    if far_pairs == 0 {
        return Err(Error::NoValidPairs("far"));
    }
    Ok(MadGap { value: far_mean - near_mean, near_mean, far_mean, near_pairs, far_pairs, zero_norm_nodes })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::dataset::{generate_sbm, SbmConfig};
    use crate::rng::SeedStream;
    use ndarray::{array, Array2};

    #[test]
    fn accuracy_cases() {
        let truth = vec![Some(0), Some(1), Some(2), Some(0)];
        assert_eq!(accuracy(&[0, 1, 2, 0], &truth, &[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2, 0, 1], &truth, &[0, 1, 2, 3]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 2, 2], &truth, &[0, 1, 2, 3]).unwrap(), 0.75);
        assert!(matches!(accuracy(&[0], &truth, &[]), Err(Error::EmptyMask(_))));
    }

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::build(n, &edges).unwrap()
    }

    #[test]
    fn identical_embeddings_give_zero() {
        let g = path(6);
        let e = Array2::from_elem((6, 3), 0.7);
        let m = madgap(e.view(), &g, &MadGapConfig::default()).unwrap();
        assert!(m.value.abs() < 1e-15);
    }

    #[test]
    fn orthogonal_far_identical_near_gives_one() {
        // 0-1 near, 0-2/1-2 far at thresholds 1/2 on the path 0-1 + isolated 2
        let g = Graph::build(3, &[(0, 1)]).unwrap();
        let e = array![[1.0, 0.0], [2.0, 0.0], [0.0, 3.0]];
        let cfg = MadGapConfig { near_max_hops: 1, far_min_hops: 2 };
        let m = madgap(e.view(), &g, &cfg).unwrap();
        assert!((m.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rows_are_excluded_and_reported() {
        let g = path(5);
        let mut e = Array2::from_shape_fn((5, 2), |(i, j)| (i + 2 * j) as f64 + 1.0);
        e.row_mut(2).fill(0.0);
        let m = madgap(e.view(), &g, &MadGapConfig { near_max_hops: 1, far_min_hops: 3 }).unwrap();
        assert_eq!(m.zero_norm_nodes, vec![2]);
        assert_eq!(m.near_pairs, 2);
    }

    #[test]
    fn missing_pairs_rejected() {
        let g = Graph::build(3, &[]).unwrap();
        let e = Array2::ones((3, 2));
        assert!(matches!(madgap(e.view(), &g, &MadGapConfig::default()), Err(Error::NoValidPairs("near"))));
    }

    #[test]
    fn matches_brute_force_on_small_sbm() {
        let d = generate_sbm(&SbmConfig {
            num_classes: 2,
            nodes_per_class: 10,
            p_intra: 0.3,
            p_inter: 0.05,
            feature_dim: 4,
            seed: 3,
            ..SbmConfig::default()
        })
        .unwrap();
        let mut rng = SeedStream::new(5);
        let e = Array2::from_shape_simple_fn((20, 6), || rng.uniform() - 0.5);
        let cfg = MadGapConfig::default();
        let m = madgap(e.view(), &d.graph, &cfg).unwrap();

        // all-pairs shortest paths by repeated relaxation over a dense matrix
        let n = 20;
        let inf = usize::MAX / 4;
        let mut dist = vec![vec![inf; n]; n];
        for i in 0..n {
            dist[i][i] = 0;
            for &j in d.graph.neighbors(i) {
                dist[i][j] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dist[i][j] = dist[i][j].min(dist[i][k] + dist[k][j]);
                }
            }
        }
        let cosd = |i: usize, j: usize| {
            let (a, b) = (e.row(i), e.row(j));
            1.0 - a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())
        };
        let (mut near, mut nn, mut far, mut nf) = (0.0, 0, 0.0, 0);
        for i in 0..n {
            for j in (i + 1)..n {
                if dist[i][j] <= 2 {
                    near += cosd(i, j);
                    nn += 1;
                } else if dist[i][j] >= 4 {
                    far += cosd(i, j);
                    nf += 1;
                }
            }
        }
        let expected = far / nf as f64 - near / nn as f64;
        assert!((m.value - expected).abs() < 1e-10);
    }

    #[test]
    fn invariant_to_row_scaling() {
        let g = path(8);
        let mut rng = SeedStream::new(2);
        let e = Array2::from_shape_simple_fn((8, 3), || rng.uniform() - 0.3);
        let mut scaled = e.clone();
        for (i, mut r) in scaled.rows_mut().into_iter().enumerate() {
            r *= 0.5 + i as f64;
        }
        let cfg = MadGapConfig { near_max_hops: 1, far_min_hops: 3 };
        let a = madgap(e.view(), &g, &cfg).unwrap().value;
        let b = madgap(scaled.view(), &g, &cfg).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn swapping_pair_sets_negates() {
        let g = path(8);
        let mut rng = SeedStream::new(4);
        let e = Array2::from_shape_simple_fn((8, 3), || rng.uniform() - 0.3);
        let classes = g.hop_distance_classes(1, 3).unwrap();
        let swapped = HopClasses { near: classes.far.clone(), far: classes.near.clone(), ..classes.clone() };
        let a = madgap_with_pairs(e.view(), &classes).unwrap().value;
        let b = madgap_with_pairs(e.view(), &swapped).unwrap().value;
        assert!((a + b).abs() < 1e-15);
    }
}
