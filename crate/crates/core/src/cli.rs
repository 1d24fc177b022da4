//! Command-line verbs. Each writes its outputs atomically and is
//! deterministic for a fixed (inputs, config, seed).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus::{
    dataset_from_table, feature_table, read_tokens, tokens_from_table, write_atomic, TsvTable,
    IPA_COLUMN,
};
use crate::error::{Error, Result};
use crate::eval::pipeline::{load_lexicons, load_tables, run_on_tokens, train_corpus_lm, transcribe_tokens};
use crate::eval::{cross_validate, feature_importance, importance_table, kfold, EvalReport, Importance};
use crate::features::{extract_all, NormBase, Resources, FEATURE_NAMES};
use crate::lm::CharNgramLm;
use crate::models::{self, Family, ModelConfig, Predictor, RfParams, TrainedModel};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "gazelab", version, about = "Reading-time prediction in IPA space")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Run configuration (JSON).
    #[arg(long, global = true, env = "GAZELAB_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Denominator of the n-gram norm features.
    #[arg(long, global = true, value_enum)]
    pub norm_base: Option<NormBase>,
    /// Train the TRT model on in-sample FFD predictions.
    #[arg(long, global = true)]
    pub cascade_insample: bool,
    /// Languages without a mapping file pass characters through unchanged.
    #[arg(long, global = true)]
    pub allow_passthrough: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append an `ipa` column to a corpus TSV.
    Transcribe {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mapping_dir: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Compute the feature matrix for a transcribed corpus TSV.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mapping_dir: PathBuf,
        #[arg(long)]
        lexicon_dir: PathBuf,
        /// Transcribed corpus the LM is trained on (defaults to `--input`).
        #[arg(long, conflicts_with = "lm")]
        lm_corpus: Option<PathBuf>,
        /// Previously saved LM.
        #[arg(long)]
        lm: Option<PathBuf>,
        #[arg(long)]
        save_lm: Option<PathBuf>,
        /// Adds an `ffd_hat` column predicted by this model.
        #[arg(long)]
        ffd_model: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train one model on a feature matrix.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "FFDAvg")]
        target: String,
        /// Model family document: a JSON file or inline JSON such as
        /// `{"family":"rf","trees":100}`. Defaults to a 100-tree forest.
        #[arg(long)]
        model: Option<String>,
        /// Extra predictor columns taken from the feature matrix.
        #[arg(long = "extra")]
        extra: Vec<String>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Predict with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Cross-validate the configured model grid.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long = "target", default_values_t = vec!["FFDAvg".to_string(), "TRTAvg".to_string()])]
        targets: Vec<String>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        output_json: Option<PathBuf>,
    },
    /// Rank predictors by Pearson correlation with a target.
    Importance {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "FFDAvg")]
        target: String,
        #[arg(long = "extra")]
        extra: Vec<String>,
        #[arg(long, default_value_t = 7)]
        top: usize,
        #[arg(long)]
        output_json: Option<PathBuf>,
    },
    /// Full pipeline: train on one corpus, write predictions for another.
    Submit {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        mapping_dir: Option<PathBuf>,
        #[arg(long)]
        lexicon_dir: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
}

/// Seed and config provenance recorded with every randomised output.
#[derive(Debug, Clone, Serialize)]
pub struct RunHeader {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
}

impl GlobalArgs {
    /// Config from `--config` (or defaults), with flag overrides applied.
    /// `need_seed` makes a missing seed a validation error.
    pub fn resolve(&self, need_seed: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => match self.seed {
                Some(seed) => RunConfig::with_seed(seed),
                None if need_seed => {
                    return Err(Error::Invalid(
                        "a seed is required: pass --seed or a config file".into(),
                    ))
                }
                None => RunConfig::with_seed(0),
            },
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(nb) = self.norm_base {
            cfg.norm_base = nb;
        }
        cfg.cascade_insample |= self.cascade_insample;
        cfg.allow_passthrough |= self.allow_passthrough;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn header(cfg: &RunConfig) -> RunHeader {
    let h = RunHeader {
        tool: "gazelab",
        version: VERSION,
        seed: cfg.seed,
        config_hash: cfg.hash(),
    };
    info!("{} {} seed={} config={}", h.tool, h.version, h.seed, h.config_hash);
    h
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Transcribe {
            input,
            mapping_dir,
            output,
        } => {
            let cfg = g.resolve(false)?;
            cmd_transcribe(input, mapping_dir, output, cfg.allow_passthrough)
        }
        Command::Extract {
            input,
            mapping_dir,
            lexicon_dir,
            lm_corpus,
            lm,
            save_lm,
            ffd_model,
            output,
        } => {
            let cfg = g.resolve(false)?;
            let source = match (lm, lm_corpus) {
                (Some(path), _) => LmSource::Load(path),
                (None, Some(corpus)) => LmSource::Train(corpus),
                (None, None) => LmSource::Train(input),
            };
            cmd_extract(
                input,
                mapping_dir,
                lexicon_dir,
                source,
                &cfg,
                save_lm.as_deref(),
                ffd_model.as_deref(),
                output,
            )
        }
        Command::Train {
            features,
            target,
            model,
            extra,
            output,
        } => {
            let cfg = g.resolve(true)?;
            let family = match model {
                Some(spec) => parse_family(spec)?,
                None => Family::Rf(RfParams::default()),
            };
            cmd_train(features, &cfg.model(&family), target, extra, output).map(|_| ())
        }
        Command::Predict {
            model,
            features,
            output,
        } => cmd_predict(model, features, output),
        Command::Evaluate {
            features,
            targets,
            folds,
            output_json,
        } => {
            let mut cfg = g.resolve(true)?;
            if let Some(k) = folds {
                cfg.cv_folds = *k;
            }
            let text = cmd_evaluate(features, targets, &cfg, output_json.as_deref())?;
            print!("{text}");
            Ok(())
        }
        Command::Importance {
            features,
            target,
            extra,
            top,
            output_json,
        } => {
            let text = cmd_importance(features, target, extra, *top, output_json.as_deref())?;
            print!("{text}");
            Ok(())
        }
        Command::Submit {
            train,
            test,
            mapping_dir,
            lexicon_dir,
            output,
        } => {
            let mut cfg = g.resolve(true)?;
            let p = &mut cfg.paths;
            for (slot, flag) in [
                (&mut p.train, train),
                (&mut p.test, test),
                (&mut p.mapping_dir, mapping_dir),
                (&mut p.lexicon_dir, lexicon_dir),
            ] {
                if flag.is_some() {
                    *slot = flag.clone();
                }
            }
            cmd_submit(&cfg, output)
        }
    }
}

fn parse_family(spec: &str) -> Result<Family> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?
    };
    Ok(serde_json::from_str(&text)?)
}

pub fn cmd_transcribe(
    input: &Path,
    mapping_dir: &Path,
    output: &Path,
    allow_passthrough: bool,
) -> Result<()> {
    let mut table = TsvTable::read(input)?;
    let mut tokens = tokens_from_table(&table, input)?;
    let tables = load_tables(&tokens, mapping_dir, allow_passthrough)?;
    transcribe_tokens(&mut tokens, &tables)?;
    let unmapped = tokens
        .iter()
        .filter(|t| t.ipa.as_ref().is_some_and(|i| i.had_unmapped))
        .count();
    if unmapped > 0 {
        log::warn!("{unmapped} of {} words contain unmapped characters", tokens.len());
    }
    table.set_column(
        IPA_COLUMN,
        tokens
            .iter()
            .map(|t| t.ipa.as_ref().map(|i| i.to_string()).unwrap_or_default())
            .collect(),
    );
    write_atomic(output, table.to_tsv().as_bytes())
}

pub enum LmSource<'a> {
    Train(&'a Path),
    Load(&'a Path),
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_extract(
    input: &Path,
    mapping_dir: &Path,
    lexicon_dir: &Path,
    lm_source: LmSource<'_>,
    cfg: &RunConfig,
    save_lm: Option<&Path>,
    ffd_model: Option<&Path>,
    output: &Path,
) -> Result<()> {
    let tokens = read_tokens(input)?;
    if let Some(t) = tokens.iter().find(|t| t.ipa.is_none()) {
        return Err(Error::Invalid(format!(
            "row {}: input has no ipa column; run transcribe first",
            t.id()
        )));
    }
    let lm = match lm_source {
        LmSource::Load(path) => CharNgramLm::load(path)?,
        LmSource::Train(path) => {
            let corpus = read_tokens(path)?;
            train_corpus_lm(&corpus, cfg.lm.order, cfg.lm.alpha)?
        }
    };
    if let Some(path) = save_lm {
        write_atomic(path, lm.to_json()?.as_bytes())?;
    }
    let tables = load_tables(&tokens, mapping_dir, cfg.allow_passthrough)?;
    let lexicons = load_lexicons(&tokens, lexicon_dir)?;
    let res = Resources {
        tables: &tables,
        lexicons: &lexicons,
        lm: &lm,
        norm_base: cfg.norm_base,
    };
    let (mut features, stats) = extract_all(&tokens, &res)?;
    info!(
        "{} tokens, lexicon OOV rate {:.4}, {} with unmapped characters",
        stats.tokens,
        stats.oov_rate(),
        stats.unmapped
    );
    if let Some(path) = ffd_model {
        let model = TrainedModel::load(path)?;
        for f in features.iter_mut() {
            f.ffd_hat = Some(model.predict_row(&f.to_row())?);
        }
    }
    write_atomic(output, feature_table(&tokens, &features).to_tsv().as_bytes())
}

pub fn cmd_train(
    features: &Path,
    cfg: &ModelConfig,
    target: &str,
    extra: &[String],
    output: &Path,
) -> Result<TrainedModel> {
    let table = TsvTable::read(features)?;
    let data = dataset_from_table(&table, features, Some(target), extra)?;
    let model = models::train(&data, cfg)?;
    model.save(output)?;
    Ok(model)
}

pub fn cmd_predict(model_path: &Path, features: &Path, output: &Path) -> Result<()> {
    let model = TrainedModel::load(model_path)?;
    let table = TsvTable::read(features)?;
    let extra: Vec<String> = model
        .feature_schema
        .iter()
        .filter(|n| !FEATURE_NAMES.contains(&n.as_str()) && n.as_str() != crate::features::FFD_HAT)
        .cloned()
        .collect();
    let data = dataset_from_table(&table, features, None, &extra)?;
    let preds = model.predict(&data)?;
    let mut out = String::from("language\tsentence_id\tword_id\tprediction\n");
    for (id, p) in data.row_ids().iter().zip(preds) {
        out.push_str(&format!("{}\t{}\t{}\t{p}\n", id.language, id.sentence_id, id.word_id));
    }
    write_atomic(output, out.as_bytes())
}

#[derive(Serialize)]
struct EvaluateDocument<'a> {
    header: RunHeader,
    folds: usize,
    targets: Vec<TargetReports<'a>>,
}

#[derive(Serialize)]
struct TargetReports<'a> {
    target: &'a str,
    reports: &'a [EvalReport],
}

/// Cross-validates `cfg.eval_grid` for each target; returns the text table.
pub fn cmd_evaluate(
    features: &Path,
    targets: &[String],
    cfg: &RunConfig,
    output_json: Option<&Path>,
) -> Result<String> {
    if cfg.eval_grid.is_empty() {
        return Err(Error::Invalid("empty model grid: nothing to evaluate".into()));
    }
    let head = header(cfg);
    let table = TsvTable::read(features)?;
    let mut all: Vec<(String, Vec<EvalReport>)> = Vec::new();
    for target in targets {
        let data = dataset_from_table(&table, features, Some(target), &[])?;
        let plan = kfold(data.n_rows(), cfg.cv_folds.min(data.n_rows()), cfg.seed)?;
        let reports = cfg
            .eval_grid
            .iter()
            .map(|f| cross_validate(&data, &cfg.model(f), &plan))
            .collect::<Result<Vec<_>>>()?;
        all.push((target.clone(), reports));
    }

    let width = all
        .iter()
        .flat_map(|(_, r)| r.iter().map(|e| e.model.len()))
        .max()
        .unwrap_or(5)
        .max(5);
    let mut text = String::new();
    for (target, reports) in &all {
        text.push_str(&format!(
            "{:<width$}  {:>9}  {:>9}   ({target}, k={})\n",
            "Model", "MAE", "RMSE", cfg.cv_folds
        ));
        for r in reports {
            text.push_str(&format!("{:<width$}  {:>9.4}  {:>9.4}\n", r.model, r.mae, r.rmse));
        }
        text.push('\n');
    }

    if let Some(path) = output_json {
        let doc = EvaluateDocument {
            header: head,
            folds: cfg.cv_folds,
            targets: all
                .iter()
                .map(|(t, r)| TargetReports {
                    target: t,
                    reports: r,
                })
                .collect(),
        };
        write_atomic(path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    Ok(text)
}

#[derive(Serialize)]
struct ImportanceDocument<'a> {
    target: &'a str,
    ranking: &'a [Importance],
}

pub fn cmd_importance(
    features: &Path,
    target: &str,
    extra: &[String],
    top: usize,
    output_json: Option<&Path>,
) -> Result<String> {
    let table = TsvTable::read(features)?;
    let data = dataset_from_table(&table, features, Some(target), extra)?;
    let ranked = feature_importance(&data, data.y())?;
    if let Some(path) = output_json {
        let doc = ImportanceDocument {
            target,
            ranking: &ranked,
        };
        write_atomic(path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    Ok(importance_table(target, &ranked, top))
}

pub fn cmd_submit(cfg: &RunConfig, output: &Path) -> Result<()> {
    header(cfg);
    let p = &cfg.paths;
    let missing = |name: &str| Error::Invalid(format!("submit needs a {name} path"));
    let train = p.train.as_ref().ok_or_else(|| missing("train"))?;
    let test = p.test.as_ref().ok_or_else(|| missing("test"))?;
    let mapping_dir = p.mapping_dir.as_ref().ok_or_else(|| missing("mapping_dir"))?;
    let lexicon_dir = p.lexicon_dir.as_ref().ok_or_else(|| missing("lexicon_dir"))?;
    cfg.validate_paths()?;
    let run = run_on_tokens(read_tokens(train)?, read_tokens(test)?, cfg, mapping_dir, lexicon_dir)?;
    info!(
        "lexicon OOV rate: train {:.4}, test {:.4}",
        run.train_stats.oov_rate(),
        run.test_stats.oov_rate()
    );
    write_atomic(output, run.submission.to_tsv().as_bytes())
}
