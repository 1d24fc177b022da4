//! Run configuration: a single JSON document, overridable from the CLI.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{CascadeOptions, StdMode};
use crate::features::NormBase;
use crate::lm::{DEFAULT_ALPHA, DEFAULT_ORDER};
use crate::models::{Family, KnnParams, LinRegParams, MlpParams, ModelConfig, RfParams, Selection};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub mapping_dir: Option<PathBuf>,
    pub lexicon_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub order: usize,
    pub alpha: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            order: DEFAULT_ORDER,
            alpha: DEFAULT_ALPHA,
        }
    }
}

fn linreg(selection: Selection) -> Family {
    Family::Linreg(LinRegParams {
        selection,
        ..Default::default()
    })
}

fn mlp(lr: f64, momentum: f64) -> Family {
    Family::Mlp(MlpParams {
        lr,
        momentum,
        ..Default::default()
    })
}

fn rf(feat_fraction: f64) -> Family {
    Family::Rf(RfParams {
        trees: 100,
        feat_fraction,
        ..Default::default()
    })
}

fn knn(k: usize) -> Family {
    Family::Knn(KnnParams {
        k,
        ..Default::default()
    })
}

/// Best configuration per family for FFDAvg.
pub fn default_ffd_models() -> Vec<Family> {
    vec![linreg(Selection::M5), mlp(0.005, 0.2), rf(1.0), knn(5)]
}

/// Best configuration per family for TRTAvg.
pub fn default_trt_models() -> Vec<Family> {
    vec![linreg(Selection::M5), mlp(0.005, 0.2), rf(0.75), knn(20)]
}

/// The full hyperparameter grid compared by `evaluate`.
pub fn default_eval_grid() -> Vec<Family> {
    vec![
        linreg(Selection::M5),
        linreg(Selection::Greedy),
        linreg(Selection::None),
        mlp(0.005, 0.2),
        mlp(0.5, 0.2),
        mlp(0.005, 0.002),
        mlp(0.5, 0.002),
        mlp(0.0005, 0.0002),
        rf(1.0),
        rf(0.5),
        rf(0.75),
        knn(5),
        knn(10),
        knn(20),
    ]
}

fn default_best() -> usize {
    2
}

fn default_true() -> bool {
    true
}

fn default_folds() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub lm: LmConfig,
    /// Four models, one per family, whose spread gives FFDStd.
    #[serde(default = "default_ffd_models")]
    pub ffd_models: Vec<Family>,
    /// Index into `ffd_models` of the model producing FFDAvg.
    #[serde(default = "default_best")]
    pub best_ffd: usize,
    #[serde(default = "default_trt_models")]
    pub trt_models: Vec<Family>,
    #[serde(default = "default_best")]
    pub best_trt: usize,
    #[serde(default = "default_eval_grid")]
    pub eval_grid: Vec<Family>,
    #[serde(default = "default_true")]
    pub cascade: bool,
    #[serde(default)]
    pub cascade_insample: bool,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub norm_base: NormBase,
    #[serde(default)]
    pub std_mode: StdMode,
    #[serde(default)]
    pub allow_passthrough: bool,
    pub seed: u64,
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        RunConfig {
            paths: Paths::default(),
            lm: LmConfig::default(),
            ffd_models: default_ffd_models(),
            best_ffd: default_best(),
            trt_models: default_trt_models(),
            best_trt: default_best(),
            eval_grid: default_eval_grid(),
            cascade: true,
            cascade_insample: false,
            cv_folds: default_folds(),
            norm_base: NormBase::Ipa,
            std_mode: StdMode::Sample,
            allow_passthrough: false,
            seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        // relative paths are resolved against the config file's directory
        if let Some(base) = path.parent() {
            let p = &mut cfg.paths;
            for slot in [
                &mut p.train,
                &mut p.test,
                &mut p.mapping_dir,
                &mut p.lexicon_dir,
                &mut p.output_dir,
            ] {
                if let Some(rel) = slot.as_ref().filter(|r| r.is_relative()) {
                    *slot = Some(base.join(rel));
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lm.order == 0 || self.lm.alpha.is_nan() || self.lm.alpha <= 0.0 {
            return Err(Error::Invalid("lm order must be >= 1 and alpha > 0".into()));
        }
        for (name, list, best) in [
            ("ffd_models", &self.ffd_models, self.best_ffd),
            ("trt_models", &self.trt_models, self.best_trt),
        ] {
            if list.len() != 4 {
                return Err(Error::Invalid(format!(
                    "{name} must list exactly 4 models, got {}",
                    list.len()
                )));
            }
            if best >= list.len() {
                return Err(Error::Invalid(format!("best index {best} out of range for {name}")));
            }
        }
        if self.cv_folds < 2 {
            return Err(Error::Invalid("cv_folds must be at least 2".into()));
        }
        for family in self.ffd_models.iter().chain(&self.trt_models).chain(&self.eval_grid) {
            self.model(family).validate()?;
        }
        Ok(())
    }

    /// Checks that every configured path exists.
    pub fn validate_paths(&self) -> Result<()> {
        let p = &self.paths;
        for (name, path) in [
            ("train", &p.train),
            ("test", &p.test),
            ("mapping_dir", &p.mapping_dir),
            ("lexicon_dir", &p.lexicon_dir),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(Error::Invalid(format!(
                        "{name} path {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn model(&self, family: &Family) -> ModelConfig {
        ModelConfig {
            family: family.clone(),
            seed: self.seed,
        }
    }

    pub fn ffd_configs(&self) -> Vec<ModelConfig> {
        self.ffd_models.iter().map(|f| self.model(f)).collect()
    }

    pub fn trt_configs(&self) -> Vec<ModelConfig> {
        self.trt_models.iter().map(|f| self.model(f)).collect()
    }

    pub fn cascade_options(&self) -> CascadeOptions {
        CascadeOptions {
            enabled: self.cascade,
            insample: self.cascade_insample,
            folds: self.cv_folds,
            seed: self.seed,
        }
    }

    /// Short SHA-256 digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
