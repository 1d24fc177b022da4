use serde::{Deserialize, Serialize};

use super::cv::{kfold, FoldPlan};
use crate::error::{Error, Result};
use crate::features::FFD_HAT;
use crate::models::{self, Dataset, ModelConfig, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeOptions {
    /// Add `ffd_hat` to the TRT model's inputs.
    pub enabled: bool,
    /// Use in-sample FFD predictions for TRT training instead of
    /// out-of-fold ones.
    pub insample: bool,
    pub folds: usize,
    pub seed: u64,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions {
            enabled: true,
            insample: false,
            folds: 10,
            seed: 0,
        }
    }
}

/// Which fold model produced each training row's `ffd_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageTrace {
    pub plan: FoldPlan,
    /// `producer[r]` is the fold whose complement-trained model predicted row r.
    pub producer: Vec<usize>,
}

impl LeakageTrace {
    /// True when no row's `ffd_hat` came from a model that saw that row.
    pub fn is_leak_free(&self) -> bool {
        self.producer
            .iter()
            .enumerate()
            .all(|(r, &fold)| !self.plan.train_rows(fold).contains(&r))
    }
}

#[derive(Debug, Clone)]
pub struct CascadeModels {
    pub ffd: TrainedModel,
    pub trt: TrainedModel,
    /// TRT training matrix (15 columns when the cascade is enabled).
    pub trt_train: Dataset,
    pub trace: Option<LeakageTrace>,
}

/// `data` with the TRT target and, if given, an appended `ffd_hat` column.
pub fn trt_dataset(data: &Dataset, trt_y: &[f64], ffd_hat: Option<&[f64]>) -> Result<Dataset> {
    let with_target = data.with_target(trt_y.to_vec())?;
    match ffd_hat {
        Some(hat) => with_target.with_feature(FFD_HAT, hat),
        None => Ok(with_target),
    }
}

/// Trains the FFD model on `data` (whose target is FFDAvg) and the TRT model
/// on the same rows with target `trt_y`, feeding it predicted FFD.
pub fn cascade_train(
    data: &Dataset,
    trt_y: &[f64],
    cfg_ffd: &ModelConfig,
    cfg_trt: &ModelConfig,
    opts: &CascadeOptions,
) -> Result<CascadeModels> {
    cfg_ffd.validate()?;
    cfg_trt.validate()?;
    let ffd = models::train(data, cfg_ffd)?;

    if !opts.enabled {
        let trt_train = trt_dataset(data, trt_y, None)?;
        let trt = models::train(&trt_train, cfg_trt)?;
        return Ok(CascadeModels {
            ffd,
            trt,
            trt_train,
            trace: None,
        });
    }

    let (hat, trace) = if opts.insample {
        (ffd.predict(data)?, None)
    } else {
        let k = opts.folds.min(data.n_rows());
        if k < 2 {
            return Err(Error::Invalid(
                "out-of-fold cascade needs at least two training rows".into(),
            ));
        }
        let plan = kfold(data.n_rows(), k, opts.seed)?;
        let mut hat = vec![0.0; data.n_rows()];
        let mut producer = vec![usize::MAX; data.n_rows()];
        for fold in 0..plan.k {
            let model = models::train(&data.subset(&plan.train_rows(fold)), cfg_ffd)
                .map_err(|e| Error::Fold {
                    fold,
                    source: Box::new(e),
                })?;
            for r in plan.fold_rows(fold) {
                hat[r] = models::Predictor::predict_row(&model, data.row(r))?;
                producer[r] = fold;
            }
        }
        (hat, Some(LeakageTrace { plan, producer }))
    };

    let trt_train = trt_dataset(data, trt_y, Some(&hat))?;
    let trt = models::train(&trt_train, cfg_trt)?;
    Ok(CascadeModels {
        ffd,
        trt,
        trt_train,
        trace,
    })
}
