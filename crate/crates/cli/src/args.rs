use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use intramix_core::augment::{AugmentationConfig, LambdaLaw, Strategy};
use intramix_core::experiment::{seed_list, PipelineConfig};
use intramix_core::gnn::TrainConfig;
use intramix_core::pseudo::EnsembleConfig;

#[derive(Debug, Parser)]
#[command(name = "intramix", version, about = "Intra-class mixup augmentation for node classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a block-model dataset with a split and write it as a container.
    GenData(GenDataArgs),
    /// Baseline vs augmented accuracy over paired seeds.
    Run(RunArgs),
    /// Evaluate several strategies against one shared baseline per seed.
    Compare(CompareArgs),
    /// Accuracy for each fixed mixing coefficient.
    SweepLambda(SweepArgs),
    /// Closed forms and Monte-Carlo checks of the noise-reduction results.
    VerifyTheorems(VerifyArgs),
    /// MADGap of the last hidden layer for several depths.
    Madgap(MadgapArgs),
    /// Label error of mixup nodes against their parents under injected noise.
    NoiseAudit(NoiseAuditArgs),
    /// Augmentation cost as the number of generated nodes grows.
    Timing(TimingArgs),
    /// Train one GCN and save its checkpoint.
    Train(TrainOnlyArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    #[arg(long, default_value_t = 300)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0.02)]
    pub p_intra: f64,
    #[arg(long, default_value_t = 0.002)]
    pub p_inter: f64,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.7)]
    pub sigma: f64,
    #[arg(long, default_value_t = 5)]
    pub labels_per_class: usize,
    #[arg(long, default_value_t = 500)]
    pub val_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 100)]
    pub patience: usize,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            hidden_dim: self.hidden,
            num_layers: self.layers,
            learning_rate: self.lr,
            weight_decay: self.weight_decay,
            dropout_prob: self.dropout,
            max_epochs: self.epochs,
            patience: self.patience,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AugmentArgs {
    #[arg(long, default_value = "intramix")]
    pub strategy: String,
    #[arg(long, default_value_t = 100)]
    pub nodes_per_class: usize,
    #[arg(long, default_value_t = 2.0)]
    pub lambda_alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lambda_beta: f64,
    /// Use this λ for every generated node instead of drawing from Beta.
    #[arg(long)]
    pub lambda_fixed: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.4,0.5,0.6,0.7")]
    pub ensemble_dropouts: Vec<f64>,
}

impl AugmentArgs {
    pub fn strategy(&self) -> intramix_core::Result<Strategy> {
        self.strategy.parse()
    }

    pub fn augmentation(&self) -> intramix_core::Result<AugmentationConfig> {
        Ok(AugmentationConfig {
            nodes_per_class: self.nodes_per_class,
            lambda_law: match self.lambda_fixed {
                Some(l) => LambdaLaw::Fixed(l),
                None => LambdaLaw::Beta { alpha: self.lambda_alpha, beta: self.lambda_beta },
            },
            strategy: self.strategy()?,
            seed: 0,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    /// Number of runs.
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    /// First seed; run k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SeedArgs {
    pub fn list(&self) -> Vec<u64> {
        seed_list(self.seed, self.seeds)
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Container directory written by gen-data.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub augment: AugmentArgs,
    #[command(flatten)]
    pub seeds: SeedArgs,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl PipelineArgs {
    pub fn config(&self) -> intramix_core::Result<PipelineConfig> {
        let cfg = PipelineConfig {
            train: self.train.config(),
            ensemble: EnsembleConfig { dropout_probs: self.augment.ensemble_dropouts.clone(), seed: 0 },
            augmentation: self.augment.augmentation()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Strategies to evaluate; `--strategy` is ignored.
    #[arg(long, value_delimiter = ',', default_value = "intramix,pl_only,random_con,zeros")]
    pub strategies: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")]
    pub grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct MadgapArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub near_max: usize,
    #[arg(long, default_value_t = 4)]
    pub far_min: usize,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    pub sizes: Vec<usize>,
    /// Generated nodes for the end-to-end comparison; defaults to a tenth of the graph.
    #[arg(long)]
    pub end_to_end: Option<usize>,
    #[arg(long, default_value_t = 15)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: usize,
    #[arg(long = "lambda", value_delimiter = ',', default_value = "0.1,0.3,0.5")]
    pub lambdas: Vec<f64>,
    /// Per-class label-noise scales.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub feature_sigma: f64,
    /// η₁ = η₂ grid for the propagation check; the first entry is the headline point.
    #[arg(long, value_delimiter = ',', default_value = "0,1,3")]
    pub eta: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub propagation_lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseAuditArgs {
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    #[arg(long, default_value_t = 300)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0.02)]
    pub p_intra: f64,
    #[arg(long, default_value_t = 0.002)]
    pub p_inter: f64,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.7)]
    pub sigma: f64,
    #[arg(long, default_value_t = 5)]
    pub labels_per_class: usize,
    #[arg(long, default_value_t = 500)]
    pub val_size: usize,
    #[arg(long, default_value_t = 0.2)]
    pub noise_rate: f64,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub augment: AugmentArgs,
    #[command(flatten)]
    pub seeds: SeedArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainOnlyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
