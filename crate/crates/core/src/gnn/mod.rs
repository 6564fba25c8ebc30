//! Graph convolutional network with hand-written backpropagation.
//!
//! Layer `l` computes `Z_l = Â · (drop(H_l) · W_l) + b_l` with
//! `H_{l+1} = relu(Z_l)`; the last `Z` is the logit matrix. Two layers is
//! the default depth, deeper stacks exist for over-smoothing studies.

mod adam;
mod forward;
mod model;
mod train;

pub use adam::Adam;
pub use forward::{forward, loss_and_grad, ForwardTrace, Targets};
pub use model::{Layer, ModelParams};
pub use train::{evaluate_logits, predict, train, EpochRecord, TrainConfig, TrainHistory, TrainingSet};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
