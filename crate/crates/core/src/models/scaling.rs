//! Per-feature normalisation statistics stored with trained models.

use serde::{Deserialize, Serialize};

use super::Dataset;

/// Min-max scaling to `[0, 1]`; constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub range: Vec<f64>,
}

impl MinMax {
    pub fn fit(data: &Dataset) -> Self {
        let p = data.n_cols();
        let mut min = vec![f64::INFINITY; p];
        let mut max = vec![f64::NEG_INFINITY; p];
        for i in 0..data.n_rows() {
            for (j, &v) in data.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        let range = min
            .iter()
            .zip(&max)
            .map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
            .collect();
        MinMax { min, range }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.range))
            .map(|(v, (lo, r))| (v - lo) / r)
            .collect()
    }
}

/// Scalar min-max scaling for targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub min: f64,
    pub range: f64,
}

impl TargetScale {
    pub fn fit(y: &[f64]) -> Self {
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        TargetScale {
            min: lo,
            range: if hi > lo { hi - lo } else { 1.0 },
        }
    }

    pub fn forward(&self, v: f64) -> f64 {
        (v - self.min) / self.range
    }

    pub fn inverse(&self, v: f64) -> f64 {
        v * self.range + self.min
    }
}

/// Standardisation to zero mean, unit (population) variance; constant
/// columns keep a unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standard {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standard {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.n_rows() as f64;
        let p = data.n_cols();
        let mut mean = vec![0.0; p];
        for i in 0..data.n_rows() {
            for (m, v) in mean.iter_mut().zip(data.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for i in 0..data.n_rows() {
            for ((s, v), m) in var.iter_mut().zip(data.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standard { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}
