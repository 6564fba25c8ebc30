use super::model::ModelParams;

/// Adam with coupled L2 weight decay on weight matrices (biases exempt).
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    step: i32,
    first: ModelParams,
    second: ModelParams,
}

impl Adam {
    pub fn new(params: &ModelParams, learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            step: 0,
            first: params.zeros_like(),
            second: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, lr, eps, wd) = (self.beta1, self.beta2, self.learning_rate, self.epsilon, self.weight_decay);
        let layers = params
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.first.layers.iter_mut().zip(self.second.layers.iter_mut()));
        for ((p, g), (m, v)) in layers {
            let update = |w: &mut f64, grad: f64, m: &mut f64, v: &mut f64| {
                *m = b1 * *m + (1.0 - b1) * grad;
                *v = b2 * *v + (1.0 - b2) * grad * grad;
                *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
            };
            for (((w, &grad), m), v) in
                p.weight.iter_mut().zip(g.weight.iter()).zip(m.weight.iter_mut()).zip(v.weight.iter_mut())
            {
                let grad = grad + wd * *w;
                update(w, grad, m, v);
            }
            for (((w, &grad), m), v) in
                p.bias.iter_mut().zip(g.bias.iter()).zip(m.bias.iter_mut()).zip(v.bias.iter_mut())
            {
                update(w, grad, m, v);
            }
        }
    }
}
