use serde::{Deserialize, Serialize};

use super::metrics::pearson;
use crate::error::{Error, Result};
use crate::models::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    pub r: f64,
    /// The feature (or target) was constant, so `r` is reported as 0.
    pub zero_variance: bool,
}

/// Pearson r of every feature column against `target`, sorted by |r|
/// descending (column order among ties).
pub fn feature_importance(data: &Dataset, target: &[f64]) -> Result<Vec<Importance>> {
    if data.n_rows() < 2 {
        return Err(Error::Invalid("correlation needs at least two rows".into()));
    }
    if target.len() != data.n_rows() {
        return Err(Error::Invalid(format!(
            "target has {} values for {} rows",
            target.len(),
            data.n_rows()
        )));
    }
    let mut out = data
        .feature_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let r = pearson(&data.column(j), target)?;
            Ok(Importance {
                feature: name.clone(),
                r: r.unwrap_or(0.0),
                zero_variance: r.is_none(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.r.abs().total_cmp(&a.r.abs()));
    Ok(out)
}

/// Two-column text report of the top `limit` predictors.
pub fn importance_table(target: &str, ranked: &[Importance], limit: usize) -> String {
    let width = ranked
        .iter()
        .map(|i| i.feature.len())
        .max()
        .unwrap_or(0)
        .max(target.len());
    let mut out = format!("{:<width$}  {:>8}\n", target, "r");
    for imp in ranked.iter().take(limit) {
        let flag = if imp.zero_variance { "  (zero variance)" } else { "" };
        out.push_str(&format!("{:<width$}  {:>8.4}{flag}\n", imp.feature, imp.r));
    }
    out
}
