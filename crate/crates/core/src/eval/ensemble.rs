use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Dataset, TrainedModel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StdMode {
    /// Divisor N - 1.
    #[default]
    Sample,
    /// Divisor N.
    Population,
}

/// Standard deviation of `values` under `mode`.
pub fn spread(values: &[f64], mode: StdMode) -> f64 {
    let n = values.len();
    let divisor = match mode {
        StdMode::Sample if n > 1 => (n - 1) as f64,
        StdMode::Sample => return 0.0,
        StdMode::Population => n as f64,
    };
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / divisor).sqrt()
}

/// Per-row standard deviation of the predictions of exactly four models.
pub fn ensemble_std(models: &[TrainedModel], test: &Dataset, mode: StdMode) -> Result<Vec<f64>> {
    if models.len() != 4 {
        return Err(Error::Invalid(format!(
            "ensemble needs exactly 4 models, got {}",
            models.len()
        )));
    }
    let preds = models
        .iter()
        .map(|m| m.predict(test))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..test.n_rows())
        .map(|i| spread(&[preds[0][i], preds[1][i], preds[2][i], preds[3][i]], mode))
        .collect())
}
