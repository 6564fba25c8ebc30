//! Node synthesis by mixup and wiring of the synthesized nodes into the
//! graph, together with the ablation variants used to study each part.

mod mixup;
mod wiring;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{NodeTable, Provenance, SplitMasks};
use crate::error::{Error, Result};
use crate::graph::Graph;

pub use mixup::{mixup_generate, vanilla_mixup_generate};
pub use wiring::{wire_neighbors, AnchorRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaLaw {
    Beta { alpha: f64, beta: f64 },
    Fixed(f64),
}

impl Default for LambdaLaw {
    fn default() -> Self {
        LambdaLaw::Beta { alpha: 2.0, beta: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Intra-class mixup wired to two high-quality same-class nodes.
    Intramix,
    /// Inter-class mixup, no edges.
    MixupNoCon,
    /// Inter-class mixup wired to its parents.
    MixupWCon,
    /// Inter-class mixup wired to the two most similar feature rows.
    MixupSimCon,
    /// Intra-class mixup wired to its own parents.
    DirectCon,
    /// Intra-class mixup wired to two random nodes.
    RandomCon,
    /// Intra-class mixup, no edges.
    WithoutCon,
    /// Intramix wiring with all-zero generated features.
    Zeros,
    /// Intramix wiring with all-one generated features.
    Ones,
    /// No generation; pseudo-labeled nodes join the training set.
    PlOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 10] = [
        Strategy::Intramix,
        Strategy::MixupNoCon,
        Strategy::MixupWCon,
        Strategy::MixupSimCon,
        Strategy::DirectCon,
        Strategy::RandomCon,
        Strategy::WithoutCon,
        Strategy::Zeros,
        Strategy::Ones,
        Strategy::PlOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Intramix => "intramix",
            Strategy::MixupNoCon => "mixup_no_con",
            Strategy::MixupWCon => "mixup_w_con",
            Strategy::MixupSimCon => "mixup_sim_con",
            Strategy::DirectCon => "direct_con",
            Strategy::RandomCon => "random_con",
            Strategy::WithoutCon => "without_con",
            Strategy::Zeros => "zeros",
            Strategy::Ones => "ones",
            Strategy::PlOnly => "pl_only",
        }
    }

    fn is_vanilla(self) -> bool {
        matches!(self, Strategy::MixupNoCon | Strategy::MixupWCon | Strategy::MixupSimCon)
    }

    fn anchor_rule(self) -> Option<AnchorRule> {
        match self {
            Strategy::Intramix | Strategy::Zeros | Strategy::Ones => Some(AnchorRule::HighQualitySameClass),
            Strategy::MixupWCon | Strategy::DirectCon => Some(AnchorRule::Parents),
            Strategy::MixupSimCon => Some(AnchorRule::MostSimilar),
            Strategy::RandomCon => Some(AnchorRule::Uniform),
            Strategy::MixupNoCon | Strategy::WithoutCon | Strategy::PlOnly => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    /// Generated nodes per eligible class.
    pub nodes_per_class: usize,
    pub lambda_law: LambdaLaw,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self { nodes_per_class: 100, lambda_law: LambdaLaw::default(), strategy: Strategy::Intramix, seed: 0 }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        match self.lambda_law {
            LambdaLaw::Fixed(l) if !(0.0..=1.0).contains(&l) => {
                Err(Error::InvalidConfig(format!("fixed lambda {l} outside [0, 1]")))
            }
            LambdaLaw::Beta { alpha, beta } if !(alpha > 0.0 && beta > 0.0) => {
                Err(Error::InvalidConfig(format!("beta parameters ({alpha}, {beta}) must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Synthesized nodes, in the order they are appended to the graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneratedBatch {
    pub new_features: Array2<f64>,
    pub new_labels: Vec<usize>,
    pub parent_pairs: Vec<(usize, usize)>,
    pub lambdas: Vec<f64>,
    /// Class distributions for inter-class mixup; `None` when labels are hard.
    pub soft_labels: Option<Vec<Vec<f64>>>,
    /// Original nodes each generated node was connected to (filled by wiring).
    pub anchors: Vec<Vec<usize>>,
    /// Generated nodes that found no anchor.
    pub unanchored: Vec<usize>,
    pub skipped_classes: Vec<usize>,
}

impl GeneratedBatch {
    pub fn len(&self) -> usize {
        self.new_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAudit {
    pub new_edges: usize,
    /// Edges whose anchor's true class equals the generated node's label.
    pub same_class: usize,
    pub fraction_same_class: f64,
}

/// Fraction of new edges that join a generated node to an anchor of the same
/// true class.
pub fn audit_edges(batch: &GeneratedBatch, ground_truth: &[usize]) -> EdgeAudit {
    let mut total = 0;
    let mut same = 0;
    for (g, anchors) in batch.anchors.iter().enumerate() {
        for &a in anchors {
            total += 1;
            if ground_truth[a] == batch.new_labels[g] {
                same += 1;
            }
        }
    }
    EdgeAudit {
        new_edges: total,
        same_class: same,
        fraction_same_class: if total == 0 { 0.0 } else { same as f64 / total as f64 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationReport {
    pub strategy: Strategy,
    pub generated_per_class: Vec<usize>,
    pub skipped_classes: Vec<usize>,
    pub unanchored_nodes: usize,
    pub single_anchor_nodes: usize,
    pub new_edges: usize,
    /// `times used → number of anchors used that many times`.
    pub anchor_usage: BTreeMap<usize, usize>,
    pub high_quality_nodes: usize,
    pub pseudo_nodes: usize,
    pub train_mask_size: usize,
    pub edge_audit: Option<EdgeAudit>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub generation_secs: f64,
    pub wiring_secs: f64,
}

/// Result of applying a strategy: the graph and table to train on, the
/// training mask, and the bookkeeping needed to report on it.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub graph: Graph,
    pub table: NodeTable,
    pub train_mask: Vec<usize>,
    pub batch: GeneratedBatch,
    pub report: AugmentationReport,
    pub timing: StageTiming,
}

impl Augmented {
    /// Soft targets for generated nodes, keyed by their index in the
    /// augmented table.
    pub fn soft_targets(&self) -> Vec<(usize, &[f64])> {
        let offset = self.table.num_nodes() - self.batch.len();
        match &self.batch.soft_labels {
            Some(soft) => soft.iter().enumerate().map(|(g, d)| (offset + g, d.as_slice())).collect(),
            None => Vec::new(),
        }
    }
}

/// Training indices after augmentation: the original training nodes, every
/// generated node, and with `include_pseudo` every pseudo-labeled original
/// node as well.
pub fn augmented_train_mask(table: &NodeTable, split: &SplitMasks, include_pseudo: bool) -> Vec<usize> {
    let mut mask = split.train.clone();
    for i in 0..table.num_nodes() {
        let tag = table.provenance(i);
        let extra = tag == Provenance::Generated
            || (include_pseudo && matches!(tag, Provenance::Pseudo | Provenance::HighQuality));
        if extra {
            mask.push(i);
        }
    }
    mask.sort_unstable();
    mask.dedup();
    mask
}

/// Runs one augmentation strategy on a pseudo-labeled table whose
/// high-quality nodes are already tagged.
pub fn apply_strategy(
    graph: &Graph,
    table: &NodeTable,
    split: &SplitMasks,
    cfg: &AugmentationConfig,
) -> Result<Augmented> {
    cfg.validate()?;
    let strategy = cfg.strategy;
    let started = Instant::now();
    let mut batch = match strategy {
        Strategy::PlOnly => {
            GeneratedBatch { new_features: Array2::zeros((0, table.feature_dim())), ..Default::default() }
        }
        s if s.is_vanilla() => vanilla_mixup_generate(table, cfg)?,
        _ => mixup_generate(table, cfg)?,
    };
    match strategy {
        Strategy::Zeros => batch.new_features.fill(0.0),
        Strategy::Ones => batch.new_features.fill(1.0),
        _ => {}
    }
    let generation_secs = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let new_graph = match strategy.anchor_rule() {
        Some(rule) => wire_neighbors(&mut batch, table, graph, rule, cfg.seed)?,
        None => {
            batch.anchors = vec![Vec::new(); batch.len()];
            graph.with_extra_nodes(batch.len())
        }
    };
    let wiring_secs = started.elapsed().as_secs_f64();

    let new_table = table.with_generated(batch.new_features.view(), &batch.new_labels)?;
    let train_mask = augmented_train_mask(&new_table, split, strategy == Strategy::PlOnly);

    let mut generated_per_class = vec![0; table.num_classes()];
    for &c in &batch.new_labels {
        generated_per_class[c] += 1;
    }
    let mut uses: BTreeMap<usize, usize> = BTreeMap::new();
    for &a in batch.anchors.iter().flatten() {
        *uses.entry(a).or_default() += 1;
    }
    let mut anchor_usage = BTreeMap::new();
    for &count in uses.values() {
        *anchor_usage.entry(count).or_default() += 1;
    }
    let report = AugmentationReport {
        strategy,
        generated_per_class,
        skipped_classes: batch.skipped_classes.clone(),
        unanchored_nodes: if strategy.anchor_rule().is_some() { batch.unanchored.len() } else { 0 },
        single_anchor_nodes: batch.anchors.iter().filter(|a| a.len() == 1).count(),
        new_edges: new_graph.edge_count() - graph.edge_count(),
        anchor_usage,
        high_quality_nodes: (0..table.num_nodes()).filter(|&i| table.is_high_quality(i)).count(),
        pseudo_nodes: table.count(Provenance::Pseudo) + table.count(Provenance::HighQuality),
        train_mask_size: train_mask.len(),
        edge_audit: None,
    };
    Ok(Augmented {
        graph: new_graph,
        table: new_table,
        train_mask,
        batch,
        report,
        timing: StageTiming { generation_secs, wiring_secs },
    })
}

#[cfg(test)]
mod tests;
