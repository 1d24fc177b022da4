use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mae, rmse};
use crate::error::{Error, Result};
use crate::models::{self, Dataset, ModelConfig, Predictor};

/// Assignment of rows to validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.assignments.len()
    }

    /// Validation rows of `fold`, ascending.
    pub fn fold_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&r| self.assignments[r] == fold)
            .collect()
    }

    /// Training rows for `fold` (its complement), ascending.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&r| self.assignments[r] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle of the row indices, then round-robin fold assignment.
pub fn kfold(n_rows: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n_rows {
        return Err(Error::Invalid(format!(
            "fold count {k} must be between 2 and the row count {n_rows}"
        )));
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n_rows];
    for (pos, &row) in order.iter().enumerate() {
        assignments[row] = pos % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub rows: usize,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ModelConfig>,
    /// Metrics over the pooled out-of-fold predictions.
    pub mae: f64,
    pub rmse: f64,
    pub folds: Vec<FoldReport>,
    #[serde(skip)]
    pub predictions: Vec<f64>,
}

/// Predicts the training-set mean target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanBaseline(pub f64);

impl MeanBaseline {
    pub fn fit(data: &Dataset) -> Self {
        MeanBaseline(data.y().iter().sum::<f64>() / data.n_rows() as f64)
    }
}

impl Predictor for MeanBaseline {
    fn predict_row(&self, _row: &[f64]) -> Result<f64> {
        Ok(self.0)
    }
}

/// Cross-validation with an arbitrary fitting function.
pub fn cross_validate_with<F>(
    data: &Dataset,
    plan: &FoldPlan,
    label: &str,
    fit: F,
) -> Result<EvalReport>
where
    F: Fn(&Dataset) -> Result<Box<dyn Predictor>> + Sync,
{
    if plan.n_rows() != data.n_rows() {
        return Err(Error::Invalid(format!(
            "fold plan covers {} rows, dataset has {}",
            plan.n_rows(),
            data.n_rows()
        )));
    }
    let per_fold: Vec<(Vec<usize>, Vec<f64>)> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let wrap = |e: Error| Error::Fold {
                fold,
                source: Box::new(e),
            };
            let model = fit(&data.subset(&plan.train_rows(fold))).map_err(wrap)?;
            let rows = plan.fold_rows(fold);
            let preds = rows
                .iter()
                .map(|&r| model.predict_row(data.row(r)))
                .collect::<Result<Vec<_>>>()
                .map_err(wrap)?;
            Ok((rows, preds))
        })
        .collect::<Result<_>>()?;

    let mut pooled = vec![0.0; data.n_rows()];
    let mut folds = Vec::with_capacity(plan.k);
    for (fold, (rows, preds)) in per_fold.iter().enumerate() {
        for (&r, &p) in rows.iter().zip(preds) {
            pooled[r] = p;
        }
        if rows.is_empty() {
            continue;
        }
        let gold: Vec<f64> = rows.iter().map(|&r| data.y()[r]).collect();
        folds.push(FoldReport {
            fold,
            rows: rows.len(),
            mae: mae(preds, &gold)?,
            rmse: rmse(preds, &gold)?,
        });
    }
    Ok(EvalReport {
        model: label.to_string(),
        config: None,
        mae: mae(&pooled, data.y())?,
        rmse: rmse(&pooled, data.y())?,
        folds,
        predictions: pooled,
    })
}

pub fn cross_validate(data: &Dataset, cfg: &ModelConfig, plan: &FoldPlan) -> Result<EvalReport> {
    cfg.validate()?;
    let mut report = cross_validate_with(data, plan, &cfg.to_string(), |train| {
        Ok(Box::new(models::train(train, cfg)?) as Box<dyn Predictor>)
    })?;
    report.config = Some(cfg.clone());
    Ok(report)
}
