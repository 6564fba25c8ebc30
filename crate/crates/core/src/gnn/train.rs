use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::argmax;
use super::forward::{forward, loss_and_grad, Targets};
use super::model::ModelParams;
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    /// Number of GCN layers; 2 unless studying depth.
    pub num_layers: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout_prob: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            num_layers: 2,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout_prob: 0.5,
            max_epochs: 200,
            patience: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(Error::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout_prob)));
        }
        if self.patience > self.max_epochs {
            return Err(Error::InvalidConfig(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.num_layers == 0 || self.hidden_dim == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig("layers, hidden width and epochs must be positive".into()));
        }
        if !(self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.weight_decay.is_finite()
            && self.weight_decay >= 0.0)
        {
            return Err(Error::InvalidConfig("learning rate must be positive, weight decay non-negative".into()));
        }
        Ok(())
    }

    fn layer_dims(&self, input: usize, classes: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(self.hidden_dim, self.num_layers - 1));
        dims.push(classes);
        dims
    }
}

/// Inputs to one training run. Nodes outside `train` contribute nothing to
/// the loss; `validation_labels[k]` is the class of `validation[k]`.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a> {
    pub adjacency: &'a NormalizedAdjacency,
    pub features: ArrayView2<'a, f64>,
    pub targets: &'a Targets,
    pub train: &'a [usize],
    pub validation: &'a [usize],
    pub validation_labels: &'a [usize],
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_accuracy: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Full-batch training with Adam. Keeps the parameters of the epoch with the
/// best validation accuracy (lower validation loss breaks ties) and stops
/// after `patience` epochs without improvement.
pub fn train(data: &TrainingSet<'_>, cfg: &TrainConfig) -> Result<(ModelParams, TrainHistory)> {
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::EmptyMask("train"));
    }
    if data.validation.len() != data.validation_labels.len() {
        return Err(Error::DimensionMismatch {
            context: "validation labels",
            expected: data.validation.len(),
            found: data.validation_labels.len(),
        });
    }
    let root = SeedStream::new(cfg.seed);
    let dims = cfg.layer_dims(data.features.ncols(), data.num_classes);
    let mut params = ModelParams::glorot(&dims, &mut root.split_named("init"))?;
    let mut optimizer = Adam::new(&params, cfg.learning_rate, cfg.weight_decay);
    let val_targets = {
        let mut labels = vec![None; data.targets.num_nodes()];
        for (&i, &c) in data.validation.iter().zip(data.validation_labels) {
            labels[i] = Some(c);
        }
        Targets::from_labels(&labels, data.num_classes)
    };

    let mut best = params.clone();
    let mut best_key = (f64::NEG_INFINITY, f64::INFINITY);
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut epochs = Vec::new();
    let mut no_dropout = SeedStream::new(0);
    for epoch in 0..cfg.max_epochs {
        let mut dropout_rng = root.split(epoch as u64);
        let trace = forward(&params, data.adjacency, data.features, cfg.dropout_prob, &mut dropout_rng)?;
        let (train_loss, grads) = loss_and_grad(&params, data.adjacency, &trace, data.targets, data.train)?;
        optimizer.step(&mut params, &grads);
        if !params.is_finite() {
            return Err(Error::NonFinite { layer: format!("parameters after epoch {epoch}") });
        }

        let (val_acc, val_loss) = if data.validation.is_empty() {
            (0.0, train_loss)
        } else {
            let eval = forward(&params, data.adjacency, data.features, 0.0, &mut no_dropout)?;
            let (val_loss, _) = loss_and_grad(&params, data.adjacency, &eval, &val_targets, data.validation)?;
            let acc = accuracy_on(eval.logits(), data.validation, data.validation_labels);
            (acc, val_loss)
        };
        epochs.push(EpochRecord { epoch, train_loss, validation_accuracy: val_acc, validation_loss: val_loss });
        if val_acc > best_key.0 || (val_acc == best_key.0 && val_loss < best_key.1) {
            best_key = (val_acc, val_loss);
            best = params.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok((best, TrainHistory { epochs, best_epoch }))
}

fn accuracy_on(logits: &Array2<f64>, nodes: &[usize], labels: &[usize]) -> f64 {
    let hits =
        nodes.iter().zip(labels).filter(|(&i, &c)| argmax(logits.row(i).as_slice().expect("row-major")) == c).count();
    hits as f64 / nodes.len() as f64
}

/// Class predictions; dropout stays active when `dropout_prob > 0`, which
/// turns one trained model into a family of perturbed predictors.
pub fn predict(
    params: &ModelParams,
    adjacency: &NormalizedAdjacency,
    features: ArrayView2<f64>,
    dropout_prob: f64,
    rng: &mut SeedStream,
) -> Result<Vec<usize>> {
    let trace = forward(params, adjacency, features, dropout_prob, rng)?;
    Ok(argmax_rows(trace.logits()))
}

pub fn evaluate_logits(
    params: &ModelParams,
    adjacency: &NormalizedAdjacency,
    features: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    let trace = forward(params, adjacency, features, 0.0, &mut SeedStream::new(0))?;
    Ok(trace.pre_activations.last().cloned().expect("non-empty"))
}

pub(crate) fn argmax_rows(logits: &Array2<f64>) -> Vec<usize> {
    logits.rows().into_iter().map(|r| argmax(r.as_slice().expect("row-major"))).collect()
}
