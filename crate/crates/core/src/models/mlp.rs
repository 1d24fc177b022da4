//! One hidden layer of sigmoid units feeding a linear output, trained by
//! per-sample gradient descent with classic momentum.
//!
//! Inputs and the target are min-max scaled to `[0, 1]`; the per-sample
//! loss is `0.5 * (output - target)^2`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scaling::{MinMax, TargetScale};
use super::{Dataset, Predictor};
use crate::error::{Error, Result};

const INIT_RANGE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// `None` means `ceil((n_features + 1) / 2)`.
    pub hidden: Option<usize>,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            lr: 0.005,
            momentum: 0.2,
            epochs: 500,
            hidden: None,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Invalid(format!("mlp lr must be >= 0, got {}", self.lr)));
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return Err(Error::Invalid(format!(
                "mlp momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Invalid("mlp epochs must be at least 1".into()));
        }
        if self.hidden == Some(0) {
            return Err(Error::Invalid("mlp needs at least one hidden unit".into()));
        }
        Ok(())
    }

    pub fn hidden_units(&self, n_features: usize) -> usize {
        self.hidden.unwrap_or((n_features + 2) / 2)
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Network weights in one flat vector:
/// `[w_hidden (hidden x inputs, row-major) | b_hidden | w_out | b_out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub inputs: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl Network {
    pub fn n_params(inputs: usize, hidden: usize) -> usize {
        hidden * inputs + 2 * hidden + 1
    }

    pub fn init(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let params = (0..Self::n_params(inputs, hidden))
            .map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE))
            .collect();
        Network {
            inputs,
            hidden,
            params,
        }
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (h, i) = (self.hidden, self.inputs);
        let (w1, rest) = self.params.split_at(h * i);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        (w1, b1, w2, rest[0])
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        let (w1, b1, _, _) = self.split();
        (0..self.hidden)
            .map(|h| {
                let row = &w1[h * self.inputs..(h + 1) * self.inputs];
                sigmoid(b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let (_, _, w2, b2) = self.split();
        let a = self.hidden_activations(x);
        b2 + w2.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Per-sample loss `0.5 * (forward(x) - target)^2` and its gradient.
    pub fn loss_and_gradient(&self, x: &[f64], target: f64) -> (f64, Vec<f64>) {
        let (h, i) = (self.hidden, self.inputs);
        let (_, _, w2, b2) = self.split();
        let a = self.hidden_activations(x);
        let out = b2 + w2.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>();
        let delta = out - target;

        let mut grad = vec![0.0; self.params.len()];
        let (g_w1, rest) = grad.split_at_mut(h * i);
        let (g_b1, rest) = rest.split_at_mut(h);
        let (g_w2, g_b2) = rest.split_at_mut(h);
        g_b2[0] = delta;
        for u in 0..h {
            g_w2[u] = delta * a[u];
            let dh = delta * w2[u] * a[u] * (1.0 - a[u]);
            g_b1[u] = dh;
            for (g, v) in g_w1[u * i..(u + 1) * i].iter_mut().zip(x) {
                *g = dh * v;
            }
        }
        (0.5 * delta * delta, grad)
    }

    pub fn loss(&self, x: &[f64], target: f64) -> f64 {
        let d = self.forward(x) - target;
        0.5 * d * d
    }
}

/// Gradient descent with a velocity term: `v = m v - lr g; w += v`.
#[derive(Debug, Clone)]
pub struct MomentumSgd {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl MomentumSgd {
    pub fn new(n_params: usize, lr: f64, momentum: f64) -> Self {
        MomentumSgd {
            lr,
            momentum,
            velocity: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((w, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v - self.lr * g;
            *w += *v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_scale: MinMax,
    pub target_scale: TargetScale,
    pub network: Network,
}

impl MlpModel {
    /// The model before any gradient step for this data and seed.
    pub fn initial(data: &Dataset, params: &MlpParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(data, params, &mut rng)
    }

    fn init_with(data: &Dataset, params: &MlpParams, rng: &mut ChaCha8Rng) -> Self {
        MlpModel {
            input_scale: MinMax::fit(data),
            target_scale: TargetScale::fit(data.y()),
            network: Network::init(data.n_cols(), params.hidden_units(data.n_cols()), rng),
        }
    }
}

impl Predictor for MlpModel {
    fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let x = self.input_scale.apply(row);
        Ok(self.target_scale.inverse(self.network.forward(&x)))
    }
}

pub fn train(data: &Dataset, params: &MlpParams, seed: u64) -> Result<MlpModel> {
    params.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::Invalid("cannot train mlp on an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = MlpModel::init_with(data, params, &mut rng);
    let xs: Vec<Vec<f64>> = (0..data.n_rows())
        .map(|i| model.input_scale.apply(data.row(i)))
        .collect();
    let ts: Vec<f64> = data.y().iter().map(|&v| model.target_scale.forward(v)).collect();

    let mut opt = MomentumSgd::new(model.network.params.len(), params.lr, params.momentum);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (loss, grad) = model.network.loss_and_gradient(&xs[i], ts[i]);
            total += loss;
            opt.step(&mut model.network.params, &grad);
        }
        let mse = 2.0 * total / xs.len() as f64;
        if !mse.is_finite() || model.network.params.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric(format!(
                "mlp diverged in epoch {epoch} (lr={}, momentum={})",
                params.lr, params.momentum
            )));
        }
    }
    Ok(model)
}
