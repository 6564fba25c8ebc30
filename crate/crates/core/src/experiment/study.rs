use ndarray::s;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{augment_and_retrain, prepare, Dataset, PipelineConfig, Summary};
use crate::augment::{apply_strategy, mixup_generate, AugmentationConfig, LambdaLaw, Strategy};
use crate::dataset::{generate_sbm, make_split, NodeTable, Provenance, SbmConfig};
use crate::error::{Error, Result};
use crate::gnn::{forward, train, ModelParams, Targets, TrainConfig, TrainingSet};
use crate::graph::{HopClasses, NormalizedAdjacency};
use crate::metrics::{madgap_with_pairs, MadGapConfig};
use crate::pseudo::{assign_pseudo_labels, inject_label_noise};
use crate::rng::SeedStream;
use crate::theory::closed_form_theorem1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    /// `E|mixed noise| / E|noise|` for this λ, for reference.
    pub noise_ratio: f64,
    pub accuracy: Summary,
    pub per_seed: Vec<f64>,
}

/// Fixed-λ augmentation at every grid value, each seed sharing one baseline.
pub fn sweep_lambda(data: &Dataset, cfg: &PipelineConfig, lambdas: &[f64], seeds: &[u64]) -> Result<Vec<LambdaPoint>> {
    cfg.validate()?;
    let ratios = lambdas.iter().map(|&l| closed_form_theorem1(l).map(|(_, r)| r)).collect::<Result<Vec<_>>>()?;
    let per_seed: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| {
            let prepared = prepare(data, cfg, s)?;
            lambdas
                .iter()
                .map(|&l| {
                    let aug = AugmentationConfig { lambda_law: LambdaLaw::Fixed(l), ..cfg.augmentation.clone() };
                    augment_and_retrain(data, &prepared, &aug, &cfg.train).map(|r| r.accuracy)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let accs: Vec<f64> = per_seed.iter().map(|row| row[k]).collect();
            LambdaPoint { lambda, noise_ratio: ratios[k], accuracy: Summary::of(&accs), per_seed: accs }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAuditConfig {
    pub sbm: SbmConfig,
    pub labels_per_class: usize,
    pub val_size: usize,
    pub noise_rate: f64,
    pub train: TrainConfig,
    pub augmentation: AugmentationConfig,
}

impl Default for NoiseAuditConfig {
    fn default() -> Self {
        Self {
            sbm: SbmConfig::default(),
            labels_per_class: 5,
            val_size: 500,
            noise_rate: 0.2,
            train: TrainConfig::default(),
            augmentation: AugmentationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAuditSeed {
    pub seed: u64,
    /// Mean `1 - P(label | x)` under the generator's class posterior, over
    /// every parent occurrence.
    pub source_error: f64,
    /// The same quantity over generated nodes.
    pub generated_error: f64,
    /// Fraction of parent occurrences whose label differs from their class.
    pub source_label_error: f64,
    /// Fraction of generated nodes whose label differs from the most
    /// probable class of their features.
    pub generated_map_error: f64,
    pub pseudo_label_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAudit {
    pub config: NoiseAuditConfig,
    pub seeds: Vec<NoiseAuditSeed>,
    pub seeds_with_reduction: usize,
}

fn posterior_error(sbm: &SbmConfig, x: ndarray::ArrayView1<f64>, label: usize) -> f64 {
    1.0 - sbm.class_posterior(x)[label]
}

/// Injects label noise into pseudo-labels and compares how far the labels of
/// mixup nodes are from the truth with how far their parents' labels are.
///
/// Generated nodes have no class of their own, so label correctness is
/// scored against the generator's exact class posterior for both groups.
pub fn noise_audit(cfg: &NoiseAuditConfig, seeds: &[u64]) -> Result<NoiseAudit> {
    let rows = seeds.par_iter().map(|&seed| noise_audit_seed(cfg, seed)).collect::<Result<Vec<_>>>()?;
    Ok(NoiseAudit {
        config: cfg.clone(),
        seeds_with_reduction: rows.iter().filter(|r| r.generated_error <= r.source_error).count(),
        seeds: rows,
    })
}

fn noise_audit_seed(cfg: &NoiseAuditConfig, seed: u64) -> Result<NoiseAuditSeed> {
    let sbm = SbmConfig { seed, ..cfg.sbm.clone() };
    let data = generate_sbm(&sbm)?;
    let split = make_split(&data.table, cfg.labels_per_class, cfg.val_size, seed)?;
    let gold = data.table.masked_to(&split.train);
    let adjacency = data.graph.normalized_adjacency();
    let validation_labels: Vec<usize> = split.validation.iter().map(|&i| data.ground_truth[i]).collect();
    let targets = Targets::from_labels(gold.labels(), gold.num_classes());
    let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
    let (model, _) = train(
        &TrainingSet {
            adjacency: &adjacency,
            features: gold.features(),
            targets: &targets,
            train: &split.train,
            validation: &split.validation,
            validation_labels: &validation_labels,
            num_classes: gold.num_classes(),
        },
        &train_cfg,
    )?;
    let pseudo = assign_pseudo_labels(&model, &adjacency, &gold)?;
    let noisy = inject_label_noise(&pseudo, cfg.noise_rate, seed)?;
    let aug = AugmentationConfig { strategy: Strategy::Intramix, seed, ..cfg.augmentation.clone() };
    let batch = mixup_generate(&noisy, &aug)?;

    let label_of = |i: usize| noisy.label(i).expect("parents are labeled");
    let parents: Vec<usize> = batch.parent_pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    let mean = |xs: &mut dyn Iterator<Item = f64>, n: usize| xs.sum::<f64>() / n as f64;
    let source_error =
        mean(&mut parents.iter().map(|&i| posterior_error(&sbm, noisy.feature_row(i), label_of(i))), parents.len());
    let source_label_error =
        mean(&mut parents.iter().map(|&i| f64::from(u8::from(label_of(i) != data.ground_truth[i]))), parents.len());
    let m = batch.len();
    let generated_error =
        mean(&mut (0..m).map(|g| posterior_error(&sbm, batch.new_features.row(g), batch.new_labels[g])), m);
    let generated_map_error = mean(
        &mut (0..m).map(|g| {
            let post = sbm.class_posterior(batch.new_features.row(g));
            f64::from(u8::from(crate::gnn::argmax(post.as_slice().expect("contiguous")) != batch.new_labels[g]))
        }),
        m,
    );
    let pseudo_nodes = noisy.nodes_with(Provenance::Pseudo);
    let pseudo_label_error = mean(
        &mut pseudo_nodes.iter().map(|&i| f64::from(u8::from(label_of(i) != data.ground_truth[i]))),
        pseudo_nodes.len(),
    );
    Ok(NoiseAuditSeed {
        seed,
        source_error,
        generated_error,
        source_label_error,
        generated_map_error,
        pseudo_label_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPoint {
    pub depth: usize,
    pub baseline: f64,
    pub intramix: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadGapStudy {
    pub depths: Vec<usize>,
    pub madgap: MadGapConfig,
    pub seeds: Vec<u64>,
    /// One row per seed, one point per depth.
    pub per_seed: Vec<Vec<DepthPoint>>,
    pub mean: Vec<DepthPoint>,
}

fn original_embedding_madgap(
    params: &ModelParams,
    adjacency: &NormalizedAdjacency,
    table: &NodeTable,
    num_original: usize,
    pairs: &HopClasses,
) -> Result<f64> {
    let trace = forward(params, adjacency, table.features(), 0.0, &mut SeedStream::new(0))?;
    let hidden = trace.last_hidden();
    Ok(madgap_with_pairs(hidden.slice(s![..num_original, ..]), pairs)?.value)
}

/// Trains GCNs of each depth with and without augmentation (the augmented
/// graph comes from the usual two-layer pseudo-labeling pass) and measures
/// MADGap of the last hidden layer over the original nodes and hop
/// distances of the original graph.
pub fn madgap_study(
    data: &Dataset,
    cfg: &PipelineConfig,
    depths: &[usize],
    madgap: &MadGapConfig,
    seeds: &[u64],
) -> Result<MadGapStudy> {
    cfg.validate()?;
    if depths.iter().any(|&d| d < 2) {
        return Err(Error::InvalidConfig("MADGap needs at least two layers".into()));
    }
    let n = data.num_nodes();
    let pairs = data.graph.hop_distance_classes(madgap.near_max_hops, madgap.far_min_hops)?;
    let aug_cfg = AugmentationConfig { strategy: Strategy::Intramix, ..cfg.augmentation.clone() };
    let per_seed: Vec<Vec<DepthPoint>> = seeds
        .par_iter()
        .map(|&seed| {
            let prepared = prepare(data, cfg, seed)?;
            let augmented = apply_strategy(
                &data.graph,
                &prepared.tagged,
                &data.split,
                &AugmentationConfig { seed, ..aug_cfg.clone() },
            )?;
            let aug_adj = augmented.graph.normalized_adjacency();
            let gold = data.truth.masked_to(&data.split.train);
            let gold_targets = Targets::from_labels(gold.labels(), gold.num_classes());
            let aug_targets = Targets::from_labels(augmented.table.labels(), gold.num_classes());
            depths
                .iter()
                .map(|&depth| {
                    let tc = TrainConfig { num_layers: depth, seed, ..cfg.train.clone() };
                    let (base, _) = train(
                        &TrainingSet {
                            adjacency: &prepared.adjacency,
                            features: gold.features(),
                            targets: &gold_targets,
                            train: &data.split.train,
                            validation: &data.split.validation,
                            validation_labels: &prepared.validation_labels,
                            num_classes: gold.num_classes(),
                        },
                        &tc,
                    )?;
                    let (mixed, _) = train(
                        &TrainingSet {
                            adjacency: &aug_adj,
                            features: augmented.table.features(),
                            targets: &aug_targets,
                            train: &augmented.train_mask,
                            validation: &data.split.validation,
                            validation_labels: &prepared.validation_labels,
                            num_classes: gold.num_classes(),
                        },
                        &tc,
                    )?;
                    Ok(DepthPoint {
                        depth,
                        baseline: original_embedding_madgap(&base, &prepared.adjacency, &gold, n, &pairs)?,
                        intramix: original_embedding_madgap(&mixed, &aug_adj, &augmented.table, n, &pairs)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mean = depths
        .iter()
        .enumerate()
        .map(|(k, &depth)| {
            let b: Vec<f64> = per_seed.iter().map(|r| r[k].baseline).collect();
            let i: Vec<f64> = per_seed.iter().map(|r| r[k].intramix).collect();
            DepthPoint { depth, baseline: Summary::of(&b).mean, intramix: Summary::of(&i).mean }
        })
        .collect();
    Ok(MadGapStudy { depths: depths.to_vec(), madgap: *madgap, seeds: seeds.to_vec(), per_seed, mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingPoint {
    pub generated_nodes: usize,
    /// Median over repeats of generation plus wiring.
    pub augmentation_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStudy {
    pub points: Vec<TimingPoint>,
    pub slope_secs_per_node: f64,
    pub intercept_secs: f64,
    pub r_squared: f64,
    /// Generated nodes used for the end-to-end comparison.
    pub end_to_end_nodes: usize,
    pub baseline_train_secs: f64,
    /// Ensemble inference, generation, wiring and retraining.
    pub augmented_secs: f64,
    pub ratio: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Wall-clock cost of augmentation as the number of generated nodes grows,
/// and of a full augmented run against baseline training. Training runs a
/// fixed number of epochs so both sides do the same amount of work per
/// epoch count. Runs sequentially.
pub fn timing_study(
    data: &Dataset,
    cfg: &PipelineConfig,
    totals: &[usize],
    end_to_end_nodes: usize,
    repeats: usize,
    seed: u64,
) -> Result<TimingStudy> {
    if totals.len() < 2 || repeats == 0 {
        return Err(Error::InvalidConfig("timing needs at least two sizes and one repeat".into()));
    }
    let classes = data.truth.num_classes();
    let mut cfg = cfg.clone();
    cfg.train.patience = cfg.train.max_epochs;
    cfg.augmentation.strategy = Strategy::Intramix;
    let prepared = prepare(data, &cfg, seed)?;
    let per_class = |total: usize| total.div_ceil(classes).max(1);

    let points = totals
        .iter()
        .map(|&total| {
            let aug = AugmentationConfig { nodes_per_class: per_class(total), seed, ..cfg.augmentation.clone() };
            let times = (0..repeats)
                .map(|_| {
                    let out = apply_strategy(&data.graph, &prepared.tagged, &data.split, &aug)?;
                    Ok(out.timing.generation_secs + out.timing.wiring_secs)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TimingPoint { generated_nodes: per_class(total) * classes, augmentation_secs: median(times) })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.generated_nodes as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.augmentation_secs).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);

    let aug = AugmentationConfig { nodes_per_class: per_class(end_to_end_nodes), ..cfg.augmentation.clone() };
    let mut base_times = Vec::new();
    let mut aug_times = Vec::new();
    for _ in 0..repeats.min(3) {
        let p = prepare(data, &cfg, seed)?;
        base_times.push(p.baseline_train_secs);
        let r = augment_and_retrain(data, &p, &aug, &cfg.train)?;
        let t = r.augmented.timing;
        aug_times.push(p.inference_secs + t.generation_secs + t.wiring_secs + r.train_secs);
    }
    let baseline_train_secs = median(base_times);
    let augmented_secs = median(aug_times);
    Ok(TimingStudy {
        points,
        slope_secs_per_node: slope,
        intercept_secs: intercept,
        r_squared,
        end_to_end_nodes: per_class(end_to_end_nodes) * classes,
        baseline_train_secs,
        augmented_secs,
        ratio: augmented_secs / baseline_train_secs,
    })
}
