use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use super::model::{Layer, ModelParams};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::rng::SeedStream;

/// Everything backpropagation needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input of each layer after dropout (already scaled).
    pub dropped_inputs: Vec<Array2<f64>>,
    /// Inverted-dropout multipliers per layer input, `None` when inactive.
    pub dropout_masks: Vec<Option<Array2<f64>>>,
    /// `Â · X W + b` per layer; the last one is the logit matrix.
    pub pre_activations: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &Array2<f64> {
        self.pre_activations.last().expect("at least one layer")
    }

    /// ReLU output of hidden layer `k` (0-based, `k < num_layers - 1`).
    pub fn hidden(&self, k: usize) -> Array2<f64> {
        self.pre_activations[k].mapv(relu)
    }

    /// Representation fed to the classifier layer.
    pub fn last_hidden(&self) -> Array2<f64> {
        let n = self.pre_activations.len();
        if n < 2 {
            return self.dropped_inputs[0].clone();
        }
        self.hidden(n - 2)
    }

    pub fn probabilities(&self) -> Array2<f64> {
        softmax_rows(self.logits().view())
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

pub fn softmax_rows(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let z = row.sum();
        row /= z;
    }
    out
}

fn dropout(input: ArrayView2<f64>, p: f64, rng: &mut SeedStream) -> (Array2<f64>, Array2<f64>) {
    let scale = 1.0 / (1.0 - p);
    let mask = Array2::from_shape_simple_fn(input.raw_dim(), || if rng.uniform() < p { 0.0 } else { scale });
    (&input * &mask, mask)
}

fn propagate(adj: &NormalizedAdjacency, input: ArrayView2<f64>, layer: &Layer) -> Array2<f64> {
    let projected = input.dot(&layer.weight);
    let mut z = adj.matmul(projected.view());
    z += &layer.bias;
    z
}

/// Runs the network. With `dropout_prob == 0` no random numbers are drawn
/// and the pass is deterministic.
pub fn forward(
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    features: ArrayView2<f64>,
    dropout_prob: f64,
    rng: &mut SeedStream,
) -> Result<ForwardTrace> {
    if features.nrows() != adj.num_nodes() {
        return Err(Error::DimensionMismatch {
            context: "feature rows vs graph nodes",
            expected: adj.num_nodes(),
            found: features.nrows(),
        });
    }
    if features.ncols() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "feature width vs first layer",
            expected: params.input_dim(),
            found: features.ncols(),
        });
    }
    if !(0.0..1.0).contains(&dropout_prob) {
        return Err(Error::InvalidConfig(format!("dropout probability {dropout_prob} outside [0, 1)")));
    }
    let depth = params.num_layers();
    let mut trace = ForwardTrace {
        dropped_inputs: Vec::with_capacity(depth),
        dropout_masks: Vec::with_capacity(depth),
        pre_activations: Vec::with_capacity(depth),
    };
    let mut current = features.to_owned();
    for (k, layer) in params.layers.iter().enumerate() {
        let (input, mask) = if dropout_prob > 0.0 {
            let (dropped, mask) = dropout(current.view(), dropout_prob, rng);
            (dropped, Some(mask))
        } else {
            (current, None)
        };
        let z = propagate(adj, input.view(), layer);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { layer: format!("layer {}", k + 1) });
        }
        current = if k + 1 < depth { z.mapv(relu) } else { Array2::zeros((0, 0)) };
        trace.dropped_inputs.push(input);
        trace.dropout_masks.push(mask);
        trace.pre_activations.push(z);
    }
    Ok(trace)
}

/// Per-node target distributions. Hard labels are one-hot rows; vanilla
/// mixup nodes may carry soft rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    rows: Array2<f64>,
}

impl Targets {
    pub fn from_labels(labels: &[Option<usize>], num_classes: usize) -> Self {
        let mut rows = Array2::zeros((labels.len(), num_classes));
        for (i, l) in labels.iter().enumerate() {
            if let Some(c) = l {
                rows[[i, *c]] = 1.0;
            }
        }
        Self { rows }
    }

    pub fn set_soft(&mut self, node: usize, dist: &[f64]) {
        self.rows.row_mut(node).assign(&Array1::from(dist.to_vec()));
    }

    pub fn row(&self, node: usize) -> ndarray::ArrayView1<'_, f64> {
        self.rows.row(node)
    }

    pub fn num_nodes(&self) -> usize {
        self.rows.nrows()
    }
}

/// Mean cross-entropy over `mask` and its gradient with respect to every
/// parameter, backpropagated through the cached trace (including its dropout
/// masks).
pub fn loss_and_grad(
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    trace: &ForwardTrace,
    targets: &Targets,
    mask: &[usize],
) -> Result<(f64, ModelParams)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("loss_and_grad"));
    }
    let logits = trace.logits();
    let n = logits.nrows();
    let scale = 1.0 / mask.len() as f64;
    let mut d_z = Array2::<f64>::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for &i in mask {
        let row = logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let log_z = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let target = targets.row(i);
        for c in 0..row.len() {
            let log_p = row[c] - log_z;
            loss -= target[c] * log_p;
            d_z[[i, c]] = (log_p.exp() - target[c]) * scale;
        }
    }
    loss *= scale;

    let mut grads = params.zeros_like();
    for k in (0..params.num_layers()).rev() {
        let layer = &params.layers[k];
        grads.layers[k].bias = d_z.sum_axis(Axis(0));
        let propagated = adj.matmul(d_z.view());
        grads.layers[k].weight = trace.dropped_inputs[k].t().dot(&propagated);
        if k == 0 {
            break;
        }
        let mut d_input = propagated.dot(&layer.weight.t());
        if let Some(mask) = &trace.dropout_masks[k] {
            d_input *= mask;
        }
        Zip::from(&mut d_input).and(&trace.pre_activations[k - 1]).for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        });
        d_z = d_input;
    }
    debug_assert_eq!(d_z.nrows(), n);
    Ok((loss, grads))
}
