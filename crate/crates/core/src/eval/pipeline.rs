//! Transcribe → extract → train FFD → cascade TRT → ensemble spread.
//!
//! The procedure is identical whether or not the test languages occur in
//! the training data; a language only needs a mapping file and a lexicon.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use log::info;

use super::cascade::{cascade_train, trt_dataset};
use super::ensemble::ensemble_std;
use crate::config::RunConfig;
use crate::corpus::{read_tokens, Token};
use crate::error::{Error, Result};
use crate::features::{extract_all, ExtractStats, FeatureVector, Resources, FEATURE_NAMES, FFD_HAT};
use crate::g2p::{load_mapping, normalize_word, MappingTable};
use crate::lexicon::{load_lexicon, Lexicon};
use crate::lm::{train_lm, CharNgramLm};
use crate::models::{self, Dataset, TrainedModel};

pub const MAPPING_EXT: &str = "map";
pub const LEXICON_EXT: &str = "tsv";

fn languages(tokens: &[Token]) -> BTreeSet<&str> {
    tokens.iter().map(|t| t.language.as_str()).collect()
}

/// Loads `<dir>/<language>.map` for every language in `tokens`. Without
/// `allow_passthrough`, missing files are an error listing every affected
/// row; with it, such languages get an identity table.
pub fn load_tables(
    tokens: &[Token],
    mapping_dir: &Path,
    allow_passthrough: bool,
) -> Result<HashMap<String, MappingTable>> {
    let mut tables = HashMap::new();
    let mut missing = BTreeSet::new();
    for lang in languages(tokens) {
        let path = mapping_dir.join(format!("{lang}.{MAPPING_EXT}"));
        if path.exists() {
            tables.insert(lang.to_string(), load_mapping(&path)?);
        } else if allow_passthrough {
            log::warn!("no mapping file for {lang:?}; characters pass through unchanged");
            tables.insert(lang.to_string(), MappingTable::identity(lang));
        } else {
            missing.insert(lang);
        }
    }
    if !missing.is_empty() {
        let mut report = String::from("unknown language (no mapping file):");
        for t in tokens.iter().filter(|t| missing.contains(t.language.as_str())) {
            report.push_str(&format!("\n  row {}: language {:?}", t.id(), t.language));
        }
        return Err(Error::Invalid(report));
    }
    Ok(tables)
}

pub fn load_lexicons(tokens: &[Token], lexicon_dir: &Path) -> Result<HashMap<String, Lexicon>> {
    languages(tokens)
        .into_iter()
        .map(|lang| {
            let path = lexicon_dir.join(format!("{lang}.{LEXICON_EXT}"));
            Ok((lang.to_string(), load_lexicon(&path, lang)?))
        })
        .collect()
}

/// Fills every token's IPA form from its language's table.
pub fn transcribe_tokens(tokens: &mut [Token], tables: &HashMap<String, MappingTable>) -> Result<()> {
    for t in tokens.iter_mut() {
        let table = tables
            .get(&t.language)
            .ok_or_else(|| Error::Invalid(format!("row {}: no mapping table", t.id())))?;
        t.ipa = Some(table.transcribe(&normalize_word(&t.word)));
    }
    Ok(())
}

pub fn train_corpus_lm(tokens: &[Token], order: usize, alpha: f64) -> Result<CharNgramLm> {
    let ipa = tokens
        .iter()
        .map(|t| {
            t.ipa
                .as_ref()
                .ok_or_else(|| Error::Invalid(format!("row {} has no IPA", t.id())))
        })
        .collect::<Result<Vec<_>>>()?;
    train_lm(ipa, order, alpha)
}

/// Base 14-column dataset; the target is taken from `target` labels, or 0
/// for unlabelled rows when `target` is `None`.
pub fn feature_dataset(
    tokens: &[Token],
    features: &[FeatureVector],
    target: Option<&str>,
) -> Result<Dataset> {
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut x = Vec::with_capacity(features.len() * FEATURE_NAMES.len());
    for f in features {
        x.extend(f.to_row());
    }
    let y = tokens
        .iter()
        .map(|t| match target {
            None => Ok(0.0),
            Some(col) => t
                .labels
                .and_then(|l| l.get(col))
                .ok_or_else(|| Error::Invalid(format!("row {} lacks label {col}", t.id()))),
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(names, x, y, tokens.iter().map(Token::row_id).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmissionRow {
    pub language: String,
    pub sentence_id: String,
    pub word_id: String,
    pub word: String,
    pub ffd_avg: f64,
    pub ffd_std: f64,
    pub trt_avg: f64,
    pub trt_std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Submission {
    pub rows: Vec<SubmissionRow>,
}

fn fixed4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

impl Submission {
    pub const HEADER: &'static str =
        "language\tsentence_id\tword_id\tword\tFFDAvg\tFFDStd\tTRTAvg\tTRTStd";

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.language,
                r.sentence_id,
                r.word_id,
                r.word,
                fixed4(r.ffd_avg),
                fixed4(r.ffd_std),
                fixed4(r.trt_avg),
                fixed4(r.trt_std)
            ));
        }
        out
    }
}

/// Everything a shared-task run produces.
#[derive(Debug, Clone)]
pub struct SharedTaskRun {
    pub submission: Submission,
    pub ffd_model: TrainedModel,
    pub trt_model: TrainedModel,
    pub lm: CharNgramLm,
    pub train_tokens: Vec<Token>,
    pub train_features: Vec<FeatureVector>,
    pub test_tokens: Vec<Token>,
    pub test_features: Vec<FeatureVector>,
    pub train_stats: ExtractStats,
    pub test_stats: ExtractStats,
}

/// Runs the full pipeline on already-parsed tokens.
pub fn run_on_tokens(
    mut train: Vec<Token>,
    mut test: Vec<Token>,
    cfg: &RunConfig,
    mapping_dir: &Path,
    lexicon_dir: &Path,
) -> Result<SharedTaskRun> {
    cfg.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Invalid("train and test sets must be non-empty".into()));
    }
    let all: Vec<Token> = train.iter().chain(&test).cloned().collect();
    let tables = load_tables(&all, mapping_dir, cfg.allow_passthrough)?;
    let lexicons = load_lexicons(&all, lexicon_dir)?;
    transcribe_tokens(&mut train, &tables)?;
    transcribe_tokens(&mut test, &tables)?;

    let lm = train_corpus_lm(&train, cfg.lm.order, cfg.lm.alpha)?;
    let res = Resources {
        tables: &tables,
        lexicons: &lexicons,
        lm: &lm,
        norm_base: cfg.norm_base,
    };
    let (mut train_features, train_stats) = extract_all(&train, &res)?;
    let (mut test_features, test_stats) = extract_all(&test, &res)?;
    info!(
        "features: {} train / {} test tokens, lexicon OOV {:.1}% / {:.1}%",
        train.len(),
        test.len(),
        100.0 * train_stats.oov_rate(),
        100.0 * test_stats.oov_rate()
    );

    let ffd_train = feature_dataset(&train, &train_features, Some("FFDAvg"))?;
    let trt_y: Vec<f64> = feature_dataset(&train, &train_features, Some("TRTAvg"))?.y().to_vec();
    let test_data = feature_dataset(&test, &test_features, None)?;

    let ffd_cfgs = cfg.ffd_configs();
    let trt_cfgs = cfg.trt_configs();
    let cascade = cascade_train(
        &ffd_train,
        &trt_y,
        &ffd_cfgs[cfg.best_ffd],
        &trt_cfgs[cfg.best_trt],
        &cfg.cascade_options(),
    )?;

    let ffd_avg = cascade.ffd.predict(&test_data)?;
    let (trt_test, hat_test) = if cfg.cascade {
        (trt_dataset(&test_data, &vec![0.0; test.len()], Some(&ffd_avg))?, Some(&ffd_avg))
    } else {
        (test_data.clone(), None)
    };
    let trt_avg = cascade.trt.predict(&trt_test)?;

    let ffd_models = ffd_cfgs
        .iter()
        .map(|c| models::train(&ffd_train, c))
        .collect::<Result<Vec<_>>>()?;
    let ffd_std = ensemble_std(&ffd_models, &test_data, cfg.std_mode)?;
    let trt_models = trt_cfgs
        .iter()
        .map(|c| models::train(&cascade.trt_train, c))
        .collect::<Result<Vec<_>>>()?;
    let trt_std = ensemble_std(&trt_models, &trt_test, cfg.std_mode)?;

    if let Some(hat) = hat_test {
        for (f, h) in test_features.iter_mut().zip(hat) {
            f.ffd_hat = Some(*h);
        }
        let train_hat = cascade.trt_train.column(cascade.trt_train.n_cols() - 1);
        debug_assert_eq!(cascade.trt_train.feature_names().last().unwrap(), FFD_HAT);
        for (f, h) in train_features.iter_mut().zip(train_hat) {
            f.ffd_hat = Some(h);
        }
    }

    let rows = test
        .iter()
        .enumerate()
        .map(|(i, t)| SubmissionRow {
            language: t.language.clone(),
            sentence_id: t.sentence_id.clone(),
            word_id: t.word_id.clone(),
            word: t.word.clone(),
            ffd_avg: ffd_avg[i],
            ffd_std: ffd_std[i],
            trt_avg: trt_avg[i],
            trt_std: trt_std[i],
        })
        .collect();

    Ok(SharedTaskRun {
        submission: Submission { rows },
        ffd_model: cascade.ffd,
        trt_model: cascade.trt,
        lm,
        train_tokens: train,
        train_features,
        test_tokens: test,
        test_features,
        train_stats,
        test_stats,
    })
}

/// Reads the train/test files named in `cfg.paths` and runs the pipeline.
pub fn run_shared_task(cfg: &RunConfig) -> Result<SharedTaskRun> {
    let need = |p: &Option<std::path::PathBuf>, name: &str| {
        p.clone()
            .ok_or_else(|| Error::Invalid(format!("config is missing paths.{name}")))
    };
    let p = &cfg.paths;
    let (train_path, test_path) = (need(&p.train, "train")?, need(&p.test, "test")?);
    let (mapping_dir, lexicon_dir) = (need(&p.mapping_dir, "mapping_dir")?, need(&p.lexicon_dir, "lexicon_dir")?);
    cfg.validate_paths()?;
    let train = read_tokens(&train_path)?;
    let test = read_tokens(&test_path)?;
    run_on_tokens(train, test, cfg, &mapping_dir, &lexicon_dir)
}
