//! Regressors: least squares, a one-hidden-layer perceptron, a random
//! forest and k-nearest neighbours, behind one train/predict interface.

mod dataset;
pub mod forest;
pub mod knn;
pub mod linreg;
pub mod mlp;
pub mod scaling;

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{Dataset, RowId};
pub use forest::{Forest, RfParams};
pub use knn::{KnnModel, KnnParams};
pub use linreg::{LinRegModel, LinRegParams, Selection};
pub use mlp::{MlpModel, MlpParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Anything that maps a feature row to a prediction.
pub trait Predictor: Send + Sync {
    fn predict_row(&self, row: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Linreg(LinRegParams),
    Mlp(MlpParams),
    Rf(RfParams),
    Knn(KnnParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub family: Family,
    pub seed: u64,
}

impl ModelConfig {
    pub fn linreg(selection: Selection, seed: u64) -> Self {
        ModelConfig {
            family: Family::Linreg(LinRegParams {
                selection,
                ..Default::default()
            }),
            seed,
        }
    }

    pub fn mlp(lr: f64, momentum: f64, seed: u64) -> Self {
        ModelConfig {
            family: Family::Mlp(MlpParams {
                lr,
                momentum,
                ..Default::default()
            }),
            seed,
        }
    }

    pub fn rf(trees: usize, feat_fraction: f64, seed: u64) -> Self {
        ModelConfig {
            family: Family::Rf(RfParams {
                trees,
                feat_fraction,
                ..Default::default()
            }),
            seed,
        }
    }

    pub fn knn(k: usize, seed: u64) -> Self {
        ModelConfig {
            family: Family::Knn(KnnParams {
                k,
                ..Default::default()
            }),
            seed,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Linreg(_) => "linreg",
            Family::Mlp(_) => "mlp",
            Family::Rf(_) => "rf",
            Family::Knn(_) => "knn",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            Family::Linreg(p) => p.validate(),
            Family::Mlp(p) => p.validate(),
            Family::Rf(p) => p.validate(),
            Family::Knn(p) => p.validate(),
        }
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Linreg(p) => write!(f, "LinReg (sel={}, ridge={:e})", p.selection, p.ridge),
            Family::Mlp(p) => write!(f, "MLP (lr={}, m={}, epochs={})", p.lr, p.momentum, p.epochs),
            Family::Rf(p) => write!(
                f,
                "RF (trees={}, feats={}%)",
                p.trees,
                (p.feat_fraction * 100.0).round()
            ),
            Family::Knn(p) => write!(f, "kNN (nn={}, dist=euc)", p.k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Parameters {
    Linreg(LinRegModel),
    Mlp(MlpModel),
    Rf(Forest),
    Knn(KnnModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub feature_schema: Vec<String>,
    pub parameters: Parameters,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    model: TrainedModel,
}

pub fn train(data: &Dataset, cfg: &ModelConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::Invalid("cannot train on an empty dataset".into()));
    }
    let parameters = match &cfg.family {
        Family::Linreg(p) => Parameters::Linreg(linreg::train(data, p)?),
        Family::Mlp(p) => Parameters::Mlp(mlp::train(data, p, cfg.seed)?),
        Family::Rf(p) => Parameters::Rf(forest::train(data, p, cfg.seed)?),
        Family::Knn(p) => Parameters::Knn(knn::train(data, p)?),
    };
    Ok(TrainedModel {
        config: cfg.clone(),
        feature_schema: data.feature_names().to_vec(),
        parameters,
    })
}

impl TrainedModel {
    fn inner(&self) -> &dyn Predictor {
        match &self.parameters {
            Parameters::Linreg(m) => m,
            Parameters::Mlp(m) => m,
            Parameters::Rf(m) => m,
            Parameters::Knn(m) => m,
        }
    }

    pub fn check_schema(&self, names: &[String]) -> Result<()> {
        if names != self.feature_schema.as_slice() {
            return Err(Error::SchemaMismatch {
                expected: self.feature_schema.clone(),
                actual: names.to_vec(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_schema(data.feature_names())?;
        (0..data.n_rows())
            .map(|i| self.predict_row(data.row(i)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Invalid("model document without format_version".into()))?;
        if version != MODEL_FORMAT_VERSION as u64 {
            return Err(Error::Version {
                found: version as u32,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let doc: ModelDocument = serde_json::from_value(value)?;
        doc.model.config.validate()?;
        Ok(doc.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::corpus::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl Predictor for TrainedModel {
    fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.feature_schema.len() {
            return Err(Error::Invalid(format!(
                "expected {} features, got {}",
                self.feature_schema.len(),
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite value in feature {:?}",
                self.feature_schema[j]
            )));
        }
        let out = self.inner().predict_row(row)?;
        if !out.is_finite() {
            return Err(Error::Numeric("model produced a non-finite prediction".into()));
        }
        Ok(out)
    }
}

pub fn save_model(model: &TrainedModel) -> Result<String> {
    model.to_json()
}

pub fn load_model(document: &str) -> Result<TrainedModel> {
    TrainedModel::from_json(document)
}
