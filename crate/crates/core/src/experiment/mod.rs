//! End-to-end drivers: baseline training, pseudo-labeling, augmentation and
//! retraining on paired seeds, plus the studies built on top of them.

mod report;
mod study;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{apply_strategy, audit_edges, AugmentationConfig, AugmentationReport, Augmented};
use crate::dataset::{Container, NodeTable, Provenance, SbmConfig, SplitMasks, SyntheticDataset};
use crate::error::{Error, Result};
use crate::gnn::{predict, train, ModelParams, Targets, TrainConfig, TrainingSet};
use crate::graph::{Graph, NormalizedAdjacency};
use crate::metrics::accuracy;
use crate::pseudo::{assign_pseudo_labels, select_high_quality, EnsembleConfig};
use crate::rng::SeedStream;

pub use report::{mask_digest, strip_timing, MaskDigest, Summary};
pub use study::{
    madgap_study, noise_audit, sweep_lambda, timing_study, DepthPoint, LambdaPoint, MadGapStudy, NoiseAudit,
    NoiseAuditConfig, NoiseAuditSeed, TimingPoint, TimingStudy,
};

/// A graph with fully labeled nodes and a split. Labels outside the training
/// set are ground truth for evaluation and never reach the pipeline.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub truth: NodeTable,
    pub split: SplitMasks,
    /// Generator settings when the data is synthetic.
    pub sbm: Option<SbmConfig>,
}

/// Generator seed of the reference benchmark graph.
pub const BENCHMARK_SEED: u64 = 7;
/// Gold labels per class in the reference split.
pub const BENCHMARK_LABELS_PER_CLASS: usize = 5;
/// Validation nodes in the reference split.
pub const BENCHMARK_VAL_SIZE: usize = 500;

impl Dataset {
    /// The reference benchmark: `SbmConfig::default()` generated with
    /// [`BENCHMARK_SEED`], split with 5 gold labels per class and 500
    /// validation nodes.
    pub fn benchmark() -> Result<Self> {
        let sbm = SbmConfig { seed: BENCHMARK_SEED, ..SbmConfig::default() };
        let d = crate::dataset::generate_sbm(&sbm)?;
        let split =
            crate::dataset::make_split(&d.table, BENCHMARK_LABELS_PER_CLASS, BENCHMARK_VAL_SIZE, BENCHMARK_SEED)?;
        Self::from_synthetic(d, split)
    }

    pub fn from_container(c: Container) -> Result<Self> {
        c.split.validate(c.graph.num_nodes())?;
        Ok(Self { graph: c.graph, truth: c.table, split: c.split, sbm: None })
    }

    pub fn from_synthetic(d: SyntheticDataset, split: SplitMasks) -> Result<Self> {
        split.validate(d.graph.num_nodes())?;
        Ok(Self { graph: d.graph, truth: d.table, split, sbm: Some(d.config) })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    fn validation_labels(&self) -> Result<Vec<usize>> {
        self.split
            .validation
            .iter()
            .map(|&i| {
                self.truth.label(i).ok_or_else(|| Error::InvalidConfig(format!("validation node {i} has no label")))
            })
            .collect()
    }

    fn ground_truth(&self) -> Option<Vec<usize>> {
        self.truth.labels().iter().copied().collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    pub ensemble: EnsembleConfig,
    pub augmentation: AugmentationConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.ensemble.validate()?;
        self.augmentation.validate()
    }

    /// Training, ensemble and augmentation seeds for run `seed`.
    fn seeded(&self, seed: u64) -> PipelineConfig {
        let mut c = self.clone();
        c.train.seed = seed;
        c.ensemble.seed = seed;
        c.augmentation.seed = seed;
        c
    }
}

/// State shared by every strategy evaluated on one seed: the baseline model
/// and the pseudo-labeled, quality-tagged table it produced.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub seed: u64,
    pub config: PipelineConfig,
    pub adjacency: NormalizedAdjacency,
    pub baseline: ModelParams,
    pub baseline_accuracy: f64,
    pub baseline_best_epoch: usize,
    pub tagged: NodeTable,
    pub pseudo_label_accuracy: Option<f64>,
    pub high_quality_accuracy: Option<f64>,
    pub high_quality_count: usize,
    pub baseline_train_secs: f64,
    pub inference_secs: f64,
    validation_labels: Vec<usize>,
}

fn tag_accuracy(table: &NodeTable, truth: &NodeTable, tags: &[Provenance]) -> Option<f64> {
    let nodes: Vec<usize> = (0..table.num_nodes()).filter(|&i| tags.contains(&table.provenance(i))).collect();
    if nodes.is_empty() {
        return None;
    }
    let hits = nodes.iter().filter(|&&i| table.label(i) == truth.label(i)).count();
    Some(hits as f64 / nodes.len() as f64)
}

/// Trains the baseline on gold training labels, pseudo-labels everything
/// else and runs the dropout ensemble.
pub fn prepare(data: &Dataset, cfg: &PipelineConfig, seed: u64) -> Result<Prepared> {
    cfg.validate()?;
    let cfg = cfg.seeded(seed);
    let split = &data.split;
    let validation_labels = data.validation_labels()?;
    let gold = data.truth.masked_to(&split.train);
    let adjacency = data.graph.normalized_adjacency();

    let started = Instant::now();
    let targets = Targets::from_labels(gold.labels(), gold.num_classes());
    let (baseline, history) = train(
        &TrainingSet {
            adjacency: &adjacency,
            features: gold.features(),
            targets: &targets,
            train: &split.train,
            validation: &split.validation,
            validation_labels: &validation_labels,
            num_classes: gold.num_classes(),
        },
        &cfg.train,
    )?;
    let baseline_train_secs = started.elapsed().as_secs_f64();
    let pred = predict(&baseline, &adjacency, gold.features(), 0.0, &mut SeedStream::new(0))?;
    let baseline_accuracy = accuracy(&pred, data.truth.labels(), &split.test)?;

    let started = Instant::now();
    let pseudo = assign_pseudo_labels(&baseline, &adjacency, &gold)?;
    let tagged = select_high_quality(&baseline, &adjacency, &pseudo, &cfg.ensemble)?;
    let inference_secs = started.elapsed().as_secs_f64();

    Ok(Prepared {
        seed,
        pseudo_label_accuracy: tag_accuracy(&tagged, &data.truth, &[Provenance::Pseudo, Provenance::HighQuality]),
        high_quality_accuracy: tag_accuracy(&tagged, &data.truth, &[Provenance::HighQuality]),
        high_quality_count: tagged.count(Provenance::HighQuality),
        config: cfg,
        adjacency,
        baseline,
        baseline_accuracy,
        baseline_best_epoch: history.best_epoch,
        tagged,
        baseline_train_secs,
        inference_secs,
        validation_labels,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedTiming {
    pub baseline_train_secs: f64,
    pub inference_secs: f64,
    pub generation_secs: f64,
    pub wiring_secs: f64,
    pub augmented_train_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub baseline_accuracy: f64,
    pub augmented_accuracy: f64,
    pub baseline_best_epoch: usize,
    pub augmented_best_epoch: usize,
    pub pseudo_label_accuracy: Option<f64>,
    pub high_quality_accuracy: Option<f64>,
    pub high_quality_count: usize,
    pub augmentation: AugmentationReport,
    pub timing: SeedTiming,
}

/// The augmented graph, the model retrained on it and that model's test
/// accuracy on the original test nodes.
pub struct Retrained {
    pub augmented: Augmented,
    pub model: ModelParams,
    pub adjacency: NormalizedAdjacency,
    pub accuracy: f64,
    pub best_epoch: usize,
    pub train_secs: f64,
}

/// Applies `augmentation` (its seed is replaced by the prepared seed) and
/// retrains with `train_cfg`.
pub fn augment_and_retrain(
    data: &Dataset,
    prepared: &Prepared,
    augmentation: &AugmentationConfig,
    train_cfg: &TrainConfig,
) -> Result<Retrained> {
    let aug_cfg = AugmentationConfig { seed: prepared.seed, ..augmentation.clone() };
    let train_cfg = TrainConfig { seed: prepared.seed, ..train_cfg.clone() };
    let mut augmented = apply_strategy(&data.graph, &prepared.tagged, &data.split, &aug_cfg)?;
    if let Some(truth) = data.ground_truth() {
        augmented.report.edge_audit = Some(audit_edges(&augmented.batch, &truth));
    }
    let started = Instant::now();
    let adjacency = augmented.graph.normalized_adjacency();
    let table = &augmented.table;
    let mut targets = Targets::from_labels(table.labels(), table.num_classes());
    for (node, dist) in augmented.soft_targets() {
        targets.set_soft(node, dist);
    }
    let (model, history) = train(
        &TrainingSet {
            adjacency: &adjacency,
            features: table.features(),
            targets: &targets,
            train: &augmented.train_mask,
            validation: &data.split.validation,
            validation_labels: &prepared.validation_labels,
            num_classes: table.num_classes(),
        },
        &train_cfg,
    )?;
    let train_secs = started.elapsed().as_secs_f64();
    let pred = predict(&model, &adjacency, table.features(), 0.0, &mut SeedStream::new(0))?;
    let accuracy = accuracy(&pred, data.truth.labels(), &data.split.test)?;
    Ok(Retrained { augmented, model, adjacency, accuracy, best_epoch: history.best_epoch, train_secs })
}

fn outcome(prepared: &Prepared, r: Retrained) -> SeedOutcome {
    SeedOutcome {
        seed: prepared.seed,
        baseline_accuracy: prepared.baseline_accuracy,
        augmented_accuracy: r.accuracy,
        baseline_best_epoch: prepared.baseline_best_epoch,
        augmented_best_epoch: r.best_epoch,
        pseudo_label_accuracy: prepared.pseudo_label_accuracy,
        high_quality_accuracy: prepared.high_quality_accuracy,
        high_quality_count: prepared.high_quality_count,
        timing: SeedTiming {
            baseline_train_secs: prepared.baseline_train_secs,
            inference_secs: prepared.inference_secs,
            generation_secs: r.augmented.timing.generation_secs,
            wiring_secs: r.augmented.timing.wiring_secs,
            augmented_train_secs: r.train_secs,
        },
        augmentation: r.augmented.report,
    }
}

/// One seed of the full pipeline.
pub fn run_seed(data: &Dataset, cfg: &PipelineConfig, seed: u64) -> Result<SeedOutcome> {
    let prepared = prepare(data, cfg, seed)?;
    let r = augment_and_retrain(data, &prepared, &cfg.augmentation, &cfg.train)?;
    Ok(outcome(&prepared, r))
}

/// `base, base+1, …` for `count` runs.
pub fn seed_list(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base.wrapping_add(k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub seeds: Vec<u64>,
    pub runs: Vec<SeedOutcome>,
    pub baseline: Summary,
    pub augmented: Summary,
    /// Mean paired difference, augmented minus baseline.
    pub mean_gain: f64,
    pub test_mask: MaskDigest,
}

impl RunReport {
    pub fn from_runs(config: PipelineConfig, seeds: Vec<u64>, runs: Vec<SeedOutcome>, test_mask: MaskDigest) -> Self {
        let base: Vec<f64> = runs.iter().map(|r| r.baseline_accuracy).collect();
        let aug: Vec<f64> = runs.iter().map(|r| r.augmented_accuracy).collect();
        let gains: Vec<f64> = aug.iter().zip(&base).map(|(a, b)| a - b).collect();
        Self {
            config,
            seeds,
            baseline: Summary::of(&base),
            augmented: Summary::of(&aug),
            mean_gain: Summary::of(&gains).mean,
            runs,
            test_mask,
        }
    }
}

/// Runs the pipeline on every seed, in parallel, ordered by seed.
pub fn run(data: &Dataset, cfg: &PipelineConfig, seeds: &[u64]) -> Result<RunReport> {
    cfg.validate()?;
    let runs = seeds.par_iter().map(|&s| run_seed(data, cfg, s)).collect::<Result<Vec<_>>>()?;
    Ok(RunReport::from_runs(cfg.clone(), seeds.to_vec(), runs, mask_digest(&data.split.test, data.num_nodes())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyComparison {
    pub seeds: Vec<u64>,
    pub baseline: Summary,
    pub baseline_per_seed: Vec<f64>,
    /// `(strategy name, summary, per-seed accuracy)` in request order.
    pub strategies: Vec<(String, Summary, Vec<f64>)>,
}

/// Evaluates several augmentation configs against one shared baseline per
/// seed.
pub fn compare_strategies(
    data: &Dataset,
    cfg: &PipelineConfig,
    variants: &[(String, AugmentationConfig)],
    seeds: &[u64],
) -> Result<StrategyComparison> {
    let per_seed: Vec<(f64, Vec<f64>)> = seeds
        .par_iter()
        .map(|&s| {
            let prepared = prepare(data, cfg, s)?;
            let accs = variants
                .iter()
                .map(|(_, a)| augment_and_retrain(data, &prepared, a, &cfg.train).map(|r| r.accuracy))
                .collect::<Result<Vec<_>>>()?;
            Ok((prepared.baseline_accuracy, accs))
        })
        .collect::<Result<_>>()?;
    let baseline_per_seed: Vec<f64> = per_seed.iter().map(|p| p.0).collect();
    let strategies = variants
        .iter()
        .enumerate()
        .map(|(k, (name, _))| {
            let accs: Vec<f64> = per_seed.iter().map(|p| p.1[k]).collect();
            (name.clone(), Summary::of(&accs), accs)
        })
        .collect();
    Ok(StrategyComparison {
        seeds: seeds.to_vec(),
        baseline: Summary::of(&baseline_per_seed),
        baseline_per_seed,
        strategies,
    })
}
