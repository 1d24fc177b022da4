mod common;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use gazelab::cli::{cmd_extract, cmd_transcribe, LmSource};
use gazelab::config::RunConfig;
use gazelab::corpus::TsvTable;
use gazelab::features::{ngram_features, ngram_profile, NormBase, FEATURE_NAMES};
use gazelab::g2p::IpaString;
use proptest::prelude::*;

fn transcribed(dir: &Path, name: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    cmd_transcribe(
        &common::fixture(&format!("corpus/{name}")),
        &common::fixture("mappings"),
        &out,
        false,
    )
    .unwrap();
    out
}

fn extract_fixture(dir: &Path, name: &str, cfg: &RunConfig, train: &Path) -> TsvTable {
    let input = transcribed(dir, name);
    let out = dir.join(format!("features_{name}"));
    cmd_extract(
        &input,
        &common::fixture("mappings"),
        &common::fixture("lexicons"),
        LmSource::Train(train),
        cfg,
        None,
        None,
        &out,
    )
    .unwrap();
    TsvTable::read(&out).unwrap()
}

#[test]
fn fixture_features_match_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::with_seed(1);
    let train = transcribed(dir.path(), "train.tsv");
    let mut rows = Vec::new();
    for name in ["train.tsv", "test.tsv"] {
        let t = extract_fixture(dir.path(), name, &cfg, &train);
        let idx: Vec<usize> = ["language", "sentence_id", "word_id", "word", "ipa"]
            .iter()
            .chain(FEATURE_NAMES.iter())
            .map(|c| t.column(c).unwrap())
            .collect();
        rows.extend(t.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect::<Vec<_>>()));
    }
    let golden = TsvTable::read(&common::fixture("golden/features_oracle.tsv")).unwrap();
    assert_eq!(golden.rows.len(), rows.len());
    for (got, want) in rows.iter().zip(&golden.rows) {
        assert_eq!(got[..5], want[..5]);
        for (j, name) in FEATURE_NAMES.iter().enumerate() {
            let (g, w): (f64, f64) = (got[5 + j].parse().unwrap(), want[5 + j].parse().unwrap());
            assert!((g - w).abs() <= 1e-9, "{} {name}: {g} vs {w}", got[3]);
        }
    }
}

#[test]
fn ortho_base_divides_by_word_length() {
    let dir = tempfile::tempdir().unwrap();
    let train = transcribed(dir.path(), "train.tsv");
    let ipa = extract_fixture(dir.path(), "test.tsv", &RunConfig::with_seed(1), &train);
    let mut cfg = RunConfig::with_seed(1);
    cfg.norm_base = NormBase::Ortho;
    let ortho = extract_fixture(dir.path(), "test.tsv", &cfg, &train);
    let col = |t: &TsvTable, r: usize, c: &str| -> f64 { t.rows[r][t.column(c).unwrap()].parse().unwrap() };
    for r in 0..ipa.rows.len() {
        let (wl, il) = (col(&ipa, r, "word_len"), col(&ipa, r, "ipa_len"));
        for (norm, count) in [("bigram_norm", "bigram_count"), ("trigram_norm", "trigram_count")] {
            let c = col(&ipa, r, count);
            let want = if il == 0.0 { 0.0 } else { c / wl };
            assert!((col(&ortho, r, norm) - want).abs() < 1e-12);
        }
        assert_eq!(col(&ortho, r, "ipa_norm"), col(&ipa, r, "ipa_norm"));
    }
}

#[test]
fn extracted_matrix_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let train = transcribed(dir.path(), "train.tsv");
    let cfg = RunConfig::with_seed(1);
    let a = extract_fixture(dir.path(), "train.tsv", &cfg, &train).to_tsv();
    let b = extract_fixture(dir.path(), "train.tsv", &cfg, &train).to_tsv();
    assert_eq!(a, b);
    let header = a.lines().next().unwrap();
    assert!(header.ends_with("FFDAvg\tFFDStd\tTRTAvg\tTRTStd"));
}

#[test]
fn extract_requires_transcription() {
    let dir = tempfile::tempdir().unwrap();
    let train = transcribed(dir.path(), "train.tsv");
    let err = cmd_extract(
        &common::fixture("corpus/test.tsv"),
        &common::fixture("mappings"),
        &common::fixture("lexicons"),
        LmSource::Train(&train),
        &RunConfig::with_seed(1),
        None,
        None,
        &dir.path().join("x.tsv"),
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(!dir.path().join("x.tsv").exists());
}

#[test]
fn saved_lm_reproduces_features() {
    let dir = tempfile::tempdir().unwrap();
    let train = transcribed(dir.path(), "train.tsv");
    let test = transcribed(dir.path(), "test.tsv");
    let cfg = RunConfig::with_seed(1);
    let run = |src: LmSource<'_>, save: Option<&Path>, out: &str| {
        let out = dir.path().join(out);
        cmd_extract(
            &test,
            &common::fixture("mappings"),
            &common::fixture("lexicons"),
            src,
            &cfg,
            save,
            None,
            &out,
        )
        .unwrap();
        fs::read_to_string(out).unwrap()
    };
    let lm_path = dir.path().join("lm.json");
    let a = run(LmSource::Train(&train), Some(&lm_path), "a.tsv");
    let b = run(LmSource::Load(&lm_path), None, "b.tsv");
    assert_eq!(a, b);
}

fn brute_ngrams(p: &[String], n: usize) -> (usize, usize) {
    if p.len() < n {
        return (0, 0);
    }
    let all: Vec<&[String]> = (0..=p.len() - n).map(|i| &p[i..i + n]).collect();
    let unique: HashSet<&[String]> = all.iter().copied().collect();
    (unique.len(), all.len())
}

proptest! {
    #[test]
    fn ngram_counts_match_brute_force(
        phonemes in prop::collection::vec(prop::sample::select(vec!["a", "b", "ʃ", "ɪ", "ã"]), 0..15),
        base in 0usize..20,
    ) {
        let ipa = IpaString::from_phonemes(phonemes.iter().copied());
        for n in [2, 3] {
            let (u, t) = brute_ngrams(&ipa.phonemes, n);
            let (unique, total, norm) = ngram_features(&ngram_profile(&ipa, n), base);
            prop_assert_eq!((unique, total), (u, t));
            prop_assert_eq!(total, ipa.len().saturating_sub(n - 1));
            prop_assert!(unique <= total);
            if base == 0 {
                prop_assert_eq!(norm, 0.0);
            } else {
                prop_assert!((norm - u as f64 / base as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn profile_counts_every_window(phonemes in prop::collection::vec("[abc]", 0..12)) {
        let ipa = IpaString::from_phonemes(phonemes.clone());
        let profile = ngram_profile(&ipa, 2);
        let mut want: HashMap<Vec<String>, usize> = HashMap::new();
        for w in phonemes.windows(2) {
            *want.entry(w.to_vec()).or_default() += 1;
        }
        prop_assert_eq!(profile.grams.into_iter().collect::<HashMap<_, _>>(), want);
    }
}

#[test]
fn out_of_corpus_token_matches_reference() {
    use gazelab::corpus::{read_tokens, Token};
    use gazelab::eval::pipeline::{load_lexicons, load_tables, train_corpus_lm, transcribe_tokens};
    use gazelab::features::{extract, Resources};

    let mut train = read_tokens(&common::fixture("corpus/train.tsv")).unwrap();
    let tables = load_tables(&train, &common::fixture("mappings"), false).unwrap();
    let lexicons = load_lexicons(&train, &common::fixture("lexicons")).unwrap();
    transcribe_tokens(&mut train, &tables).unwrap();
    let lm = train_corpus_lm(&train, 3, 0.1).unwrap();
    let mut cat = vec![Token {
        language: "en".into(),
        sentence_id: "0".into(),
        word_id: "0".into(),
        word: "cat".into(),
        ipa: None,
        labels: None,
    }];
    transcribe_tokens(&mut cat, &tables).unwrap();
    assert_eq!(cat[0].ipa.as_ref().unwrap().phonemes, ["k", "æ", "t"]);
    let res = Resources {
        tables: &tables,
        lexicons: &lexicons,
        lm: &lm,
        norm_base: NormBase::Ipa,
    };
    let got = extract(&cat[0], &res).unwrap().to_row();
    let golden = TsvTable::read(&common::fixture("golden/cat_features.tsv")).unwrap();
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        let want: f64 = golden.rows[0][golden.column(name).unwrap()].parse().unwrap();
        assert!((got[j] - want).abs() <= 1e-9, "{name}: {} vs {want}", got[j]);
    }
}

proptest! {
    #[test]
    fn repeating_a_word_scales_window_totals(
        phonemes in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 1..8),
        k in 1usize..5,
    ) {
        let once = IpaString::from_phonemes(phonemes.iter().copied());
        let rep = IpaString::from_phonemes(phonemes.iter().copied().cycle().take(k * phonemes.len()));
        for n in [2, 3] {
            let total = ngram_profile(&rep, n).total();
            prop_assert_eq!(total, (k * once.len() + 1).saturating_sub(n));
            prop_assert!(ngram_profile(&rep, n).unique() >= ngram_profile(&once, n).unique());
        }
    }
}

#[test]
fn ngrams_depend_on_order() {
    let ab = IpaString::from_phonemes(["a", "a", "b", "b"]);
    let mixed = IpaString::from_phonemes(["a", "b", "a", "b"]);
    assert_ne!(ngram_profile(&ab, 2), ngram_profile(&mixed, 2));
    assert_eq!(ab.len(), mixed.len());
    let p = ngram_profile(&mixed, 2);
    assert_eq!(ngram_features(&p, 4), (2, 3, 0.5));
}
