use ndarray::{Array1, Array2, ArrayView1};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::NodeTable;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::SeedStream;

/// Planted-partition generator settings.
///
/// Class `c` owns nodes `c * nodes_per_class .. (c + 1) * nodes_per_class`.
/// Its feature mean is `class_mean_separation / √2` along axis `c`, so any two
/// class means sit exactly `class_mean_separation` apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub num_classes: usize,
    pub nodes_per_class: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feature_dim: usize,
    pub class_mean_separation: f64,
    pub feature_noise_sigma: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            num_classes: 5,
            nodes_per_class: 300,
            p_intra: 0.02,
            p_inter: 0.002,
            feature_dim: 16,
            class_mean_separation: 1.0,
            feature_noise_sigma: 0.7,
            seed: 0,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.nodes_per_class == 0 {
            return Err(Error::InvalidConfig("block model needs at least one class and one node per class".into()));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} is not a probability")));
            }
        }
        if self.num_classes > 1 && self.p_intra <= self.p_inter {
            return Err(Error::InvalidConfig(format!(
                "p_intra ({}) must exceed p_inter ({})",
                self.p_intra, self.p_inter
            )));
        }
        if self.feature_dim < self.num_classes {
            return Err(Error::InvalidConfig(format!(
                "feature_dim ({}) must be at least num_classes ({})",
                self.feature_dim, self.num_classes
            )));
        }
        if !(self.feature_noise_sigma.is_finite() && self.feature_noise_sigma >= 0.0)
            || !self.class_mean_separation.is_finite()
        {
            return Err(Error::InvalidConfig("feature noise must be non-negative and separation finite".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_classes * self.nodes_per_class
    }

    pub fn class_means(&self) -> Array2<f64> {
        let mut means = Array2::zeros((self.num_classes, self.feature_dim));
        let offset = self.class_mean_separation / std::f64::consts::SQRT_2;
        for c in 0..self.num_classes {
            means[[c, c]] = offset;
        }
        means
    }

    /// Posterior `P(class | x)` under the generator's equal-prior isotropic
    /// Gaussian feature model. With zero feature noise the posterior is a
    /// point mass on the nearest mean (lowest index on ties).
    pub fn class_posterior(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let means = self.class_means();
        let sq: Vec<f64> =
            means.rows().into_iter().map(|m| m.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum()).collect();
        let mut post = Array1::zeros(self.num_classes);
        if self.feature_noise_sigma == 0.0 {
            let best = crate::gnn::argmax(&sq.iter().map(|d| -d).collect::<Vec<_>>());
            post[best] = 1.0;
            return post;
        }
        let two_var = 2.0 * self.feature_noise_sigma * self.feature_noise_sigma;
        let logits: Vec<f64> = sq.iter().map(|d| -d / two_var).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        for (c, l) in logits.iter().enumerate() {
            post[c] = (l - max).exp() / z;
        }
        post
    }
}

/// Output of [`generate_sbm`]. Every node of `table` carries its gold label;
/// `ground_truth` repeats them outside the table so evaluation code never has
/// to read labels from a table the pipeline has touched.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub config: SbmConfig,
    pub graph: Graph,
    pub table: NodeTable,
    pub ground_truth: Vec<usize>,
}

pub fn generate_sbm(cfg: &SbmConfig) -> Result<SyntheticDataset> {
    cfg.validate()?;
    let n = cfg.num_nodes();
    let root = SeedStream::new(cfg.seed);
    let class_of = |i: usize| i / cfg.nodes_per_class;

    let mut edge_rng = root.split_named("sbm-edges");
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if class_of(i) == class_of(j) { cfg.p_intra } else { cfg.p_inter };
            if edge_rng.uniform() < p {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::build(n, &edges)?;

    let mut feat_rng = root.split_named("sbm-features");
    let means = cfg.class_means();
    let mut features = Array2::zeros((n, cfg.feature_dim));
    for (i, mut row) in features.outer_iter_mut().enumerate() {
        row.assign(&means.row(class_of(i)));
        if cfg.feature_noise_sigma > 0.0 {
            for v in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut feat_rng);
                *v += cfg.feature_noise_sigma * z;
            }
        }
    }

    let ground_truth: Vec<usize> = (0..n).map(class_of).collect();
    let table = NodeTable::new(features, ground_truth.iter().map(|&c| Some(c)).collect(), cfg.num_classes)?;
    Ok(SyntheticDataset { config: cfg.clone(), graph, table, ground_truth })
}
