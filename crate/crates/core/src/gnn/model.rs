use std::path::Path;

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Weights and biases of every GCN layer, input side first.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<Layer>,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases. `dims` lists the width of every
    /// activation: input features, hidden sizes, then the class count.
    pub fn glorot(dims: &[usize], rng: &mut SeedStream) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!("invalid layer widths {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
                Layer {
                    weight: Array2::from_shape_simple_fn((w[0], w[1]), || dist.sample(rng)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer { weight: Array2::zeros(l.weight.raw_dim()), bias: Array1::zeros(l.bias.len()) })
                .collect(),
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.ncols())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Flat view over every scalar, weights before biases, layer by layer.
    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            layers: self
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    rows: l.weight.nrows(),
                    cols: l.weight.ncols(),
                    weight: l.weight.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::InvalidConfig(format!("unknown checkpoint format `{}`", ckpt.format)));
        }
        let mut layers = Vec::with_capacity(ckpt.layers.len());
        for (k, l) in ckpt.layers.iter().enumerate() {
            if l.bias.len() != l.cols {
                return Err(Error::DimensionMismatch {
                    context: "checkpoint bias",
                    expected: l.cols,
                    found: l.bias.len(),
                });
            }
            if let Some(prev) = layers.last().map(|p: &Layer| p.weight.ncols()) {
                if prev != l.rows {
                    return Err(Error::InvalidConfig(format!("layer {k} input width {} != {prev}", l.rows)));
                }
            }
            let weight =
                Array2::from_shape_vec((l.rows, l.cols), l.weight.clone()).map_err(|_| Error::DimensionMismatch {
                    context: "checkpoint weight",
                    expected: l.rows * l.cols,
                    found: l.weight.len(),
                })?;
            layers.push(Layer { weight, bias: Array1::from(l.bias.clone()) });
        }
        if layers.is_empty() {
            return Err(Error::InvalidConfig("checkpoint has no layers".into()));
        }
        Ok(Self { layers })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string(&self.to_checkpoint()).map_err(|source| Error::Json { path: path.into(), source })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        Self::from_checkpoint(&ckpt)
    }
}

const CHECKPOINT_FORMAT: &str = "intramix-gcn-v1";

/// On-disk model: shape metadata plus row-major weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub layers: Vec<CheckpointLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointLayer {
    pub rows: usize,
    pub cols: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}
