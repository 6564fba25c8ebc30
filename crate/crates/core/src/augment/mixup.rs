use ndarray::{Array1, Array2};
use rand_distr::{Beta, Distribution};

use super::{AugmentationConfig, GeneratedBatch, LambdaLaw};
use crate::dataset::{NodeTable, Provenance};
use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Labeled original nodes (gold, pseudo or high-quality) grouped by class.
pub(crate) fn labeled_by_class(table: &NodeTable) -> Vec<Vec<usize>> {
    let mut pools = vec![Vec::new(); table.num_classes()];
    for i in 0..table.num_nodes() {
        if matches!(table.provenance(i), Provenance::Unlabeled | Provenance::Generated) {
            continue;
        }
        if let Some(c) = table.label(i) {
            pools[c].push(i);
        }
    }
    pools
}

pub(crate) struct LambdaSampler(Option<Beta<f64>>, f64);

impl LambdaSampler {
    pub(crate) fn new(law: &LambdaLaw) -> Result<Self> {
        match *law {
            LambdaLaw::Fixed(l) => Ok(Self(None, l)),
            LambdaLaw::Beta { alpha, beta } => Beta::new(alpha, beta)
                .map(|b| Self(Some(b), 0.0))
                .map_err(|e| Error::InvalidConfig(format!("lambda law: {e}"))),
        }
    }

    pub(crate) fn draw(&self, rng: &mut SeedStream) -> f64 {
        match &self.0 {
            Some(b) => b.sample(rng),
            None => self.1,
        }
    }
}

fn pick_two(pool: &[usize], rng: &mut SeedStream) -> (usize, usize) {
    let a = rng.below(pool.len());
    let mut b = rng.below(pool.len() - 1);
    if b >= a {
        b += 1;
    }
    (pool[a], pool[b])
}

fn mix(table: &NodeTable, i: usize, j: usize, lambda: f64) -> Array1<f64> {
    let xi = table.feature_row(i);
    let xj = table.feature_row(j);
    xi.iter().zip(xj.iter()).map(|(&a, &b)| lambda * a + (1.0 - lambda) * b).collect()
}

fn stack(rows: Vec<Array1<f64>>, dim: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), dim));
    for (mut dst, src) in out.rows_mut().into_iter().zip(rows) {
        dst.assign(&src);
    }
    out
}

/// Intra-class mixup: for every class with at least two labeled nodes,
/// `nodes_per_class` new nodes, each a convex combination of two distinct
/// nodes of that class and carrying the class label.
pub fn mixup_generate(table: &NodeTable, cfg: &AugmentationConfig) -> Result<GeneratedBatch> {
    cfg.validate()?;
    let sampler = LambdaSampler::new(&cfg.lambda_law)?;
    let pools = labeled_by_class(table);
    let root = SeedStream::new(cfg.seed).split_named("mixup");
    let mut batch = GeneratedBatch::default();
    let mut rows = Vec::new();
    for (class, pool) in pools.iter().enumerate() {
        if pool.len() < 2 {
            log::warn!("class {class} has {} labeled nodes; skipping mixup for it", pool.len());
            batch.skipped_classes.push(class);
            continue;
        }
        let mut rng = root.split(class as u64);
        for _ in 0..cfg.nodes_per_class {
            let (i, j) = pick_two(pool, &mut rng);
            let lambda = sampler.draw(&mut rng);
            rows.push(mix(table, i, j, lambda));
            batch.new_labels.push(class);
            batch.parent_pairs.push((i, j));
            batch.lambdas.push(lambda);
        }
    }
    if batch.new_labels.is_empty() && cfg.nodes_per_class > 0 {
        return Err(Error::NoEligibleClass);
    }
    batch.new_features = stack(rows, table.feature_dim());
    Ok(batch)
}

/// Vanilla mixup across classes: parents drawn from all labeled nodes, soft
/// label `λ·e(yᵢ) + (1-λ)·e(yⱼ)`, stored hard label its argmax. Generates
/// the same total count as the intra-class variant.
pub fn vanilla_mixup_generate(table: &NodeTable, cfg: &AugmentationConfig) -> Result<GeneratedBatch> {
    cfg.validate()?;
    let sampler = LambdaSampler::new(&cfg.lambda_law)?;
    let pool: Vec<usize> = labeled_by_class(table).concat();
    if pool.len() < 2 {
        return Err(Error::NoEligibleClass);
    }
    let classes = table.num_classes();
    let mut rng = SeedStream::new(cfg.seed).split_named("vanilla-mixup");
    let total = cfg.nodes_per_class * classes;
    let mut batch = GeneratedBatch::default();
    let mut rows = Vec::with_capacity(total);
    let mut soft = Vec::with_capacity(total);
    for _ in 0..total {
        let (i, j) = pick_two(&pool, &mut rng);
        let lambda = sampler.draw(&mut rng);
        let mut dist = vec![0.0; classes];
        dist[table.label(i).expect("labeled")] += lambda;
        dist[table.label(j).expect("labeled")] += 1.0 - lambda;
        rows.push(mix(table, i, j, lambda));
        batch.new_labels.push(crate::gnn::argmax(&dist));
        batch.parent_pairs.push((i, j));
        batch.lambdas.push(lambda);
        soft.push(dist);
    }
    batch.new_features = stack(rows, table.feature_dim());
    batch.soft_labels = Some(soft);
    Ok(batch)
}
