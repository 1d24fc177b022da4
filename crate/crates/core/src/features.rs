//! The fourteen per-word predictors.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::error::{Error, Result};
use crate::g2p::{count_vowels, normalize_word, IpaString, MappingTable};
use crate::lexicon::Lexicon;
use crate::lm::{entropy, CharNgramLm};

/// Column order of the feature matrix.
pub const FEATURE_NAMES: [&str; 14] = [
    "word_len",
    "ipa_len",
    "ipa_count",
    "ipa_norm",
    "bigram_count",
    "trigram_count",
    "bigram_sum",
    "trigram_sum",
    "bigram_norm",
    "trigram_norm",
    "imageability",
    "concreteness",
    "phonetic_comp",
    "ipa_ent",
];

pub const FFD_HAT: &str = "ffd_hat";

/// Denominator of the `*gram_norm` features.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NormBase {
    #[default]
    Ipa,
    Ortho,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatureVector {
    pub word_len: usize,
    pub ipa_len: usize,
    pub ipa_count: usize,
    pub ipa_norm: f64,
    pub bigram_count: usize,
    pub trigram_count: usize,
    pub bigram_sum: usize,
    pub trigram_sum: usize,
    pub bigram_norm: f64,
    pub trigram_norm: f64,
    pub imageability: f64,
    pub concreteness: f64,
    pub phonetic_comp: f64,
    pub ipa_ent: f64,
    pub ffd_hat: Option<f64>,
}

impl FeatureVector {
    /// The 14 base features in [`FEATURE_NAMES`] order.
    pub fn to_row(&self) -> [f64; 14] {
        [
            self.word_len as f64,
            self.ipa_len as f64,
            self.ipa_count as f64,
            self.ipa_norm,
            self.bigram_count as f64,
            self.trigram_count as f64,
            self.bigram_sum as f64,
            self.trigram_sum as f64,
            self.bigram_norm,
            self.trigram_norm,
            self.imageability,
            self.concreteness,
            self.phonetic_comp,
            self.ipa_ent,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_row().iter().all(|v| v.is_finite()) && self.ffd_hat.is_none_or(f64::is_finite)
    }
}

/// Within-word multiset of contiguous phoneme n-grams (no padding).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramProfile {
    pub n: usize,
    pub grams: BTreeMap<Vec<String>, usize>,
}

impl NgramProfile {
    pub fn unique(&self) -> usize {
        self.grams.len()
    }

    pub fn total(&self) -> usize {
        self.grams.values().sum()
    }
}

pub fn ngram_profile(ipa: &IpaString, n: usize) -> NgramProfile {
    assert!(n >= 1, "n-gram order must be positive");
    let mut grams = BTreeMap::new();
    for window in ipa.phonemes.windows(n) {
        *grams.entry(window.to_vec()).or_insert(0) += 1;
    }
    NgramProfile { n, grams }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `(unique, total, unique / base_len)`.
pub fn ngram_features(profile: &NgramProfile, base_len: usize) -> (usize, usize, f64) {
    let unique = profile.unique();
    (unique, profile.total(), ratio(unique, base_len))
}

/// `(word_len, ipa_len, ipa_count, ipa_norm)`.
pub fn length_features(
    word: &str,
    ipa: &IpaString,
    table: &MappingTable,
) -> (usize, usize, usize, f64) {
    let word_len = word.chars().count();
    let ipa_len = ipa.len();
    let vowels = count_vowels(ipa, table);
    (word_len, ipa_len, vowels, ratio(vowels, ipa_len))
}

/// Immutable resources needed by [`extract`].
pub struct Resources<'a> {
    pub tables: &'a HashMap<String, MappingTable>,
    pub lexicons: &'a HashMap<String, Lexicon>,
    pub lm: &'a CharNgramLm,
    pub norm_base: NormBase,
}

impl Resources<'_> {
    fn table(&self, language: &str) -> Result<&MappingTable> {
        self.tables
            .get(language)
            .ok_or_else(|| Error::Invalid(format!("no mapping table for language {language:?}")))
    }

    fn lexicon(&self, language: &str) -> Result<&Lexicon> {
        self.lexicons
            .get(language)
            .ok_or_else(|| Error::Invalid(format!("no lexicon for language {language:?}")))
    }
}

pub fn extract(token: &Token, res: &Resources<'_>) -> Result<FeatureVector> {
    let ipa = token.ipa.as_ref().ok_or_else(|| {
        Error::Invalid(format!("token {} has no IPA transcription", token.id()))
    })?;
    let table = res.table(&token.language)?;
    let lexicon = res.lexicon(&token.language)?;

    let word = normalize_word(&token.word);
    let (word_len, ipa_len, ipa_count, ipa_norm) = length_features(&word, ipa, table);
    let base = match res.norm_base {
        NormBase::Ipa => ipa_len,
        NormBase::Ortho => word_len,
    };
    let (bigram_count, bigram_sum, mut bigram_norm) = ngram_features(&ngram_profile(ipa, 2), base);
    let (trigram_count, trigram_sum, mut trigram_norm) =
        ngram_features(&ngram_profile(ipa, 3), base);
    if ipa_len == 0 {
        bigram_norm = 0.0;
        trigram_norm = 0.0;
    }
    let scores = lexicon.lookup(&token.word);

    let fv = FeatureVector {
        word_len,
        ipa_len,
        ipa_count,
        ipa_norm,
        bigram_count,
        trigram_count,
        bigram_sum,
        trigram_sum,
        bigram_norm,
        trigram_norm,
        imageability: scores.imageability,
        concreteness: scores.concreteness,
        phonetic_comp: res.lm.phonotactic_complexity(ipa),
        ipa_ent: entropy(ipa),
        ffd_hat: None,
    };
    if !fv.is_finite() {
        return Err(Error::Numeric(format!("non-finite feature for token {}", token.id())));
    }
    Ok(fv)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExtractStats {
    pub tokens: usize,
    pub lexicon_oov: usize,
    pub unmapped: usize,
}

impl ExtractStats {
    pub fn oov_rate(&self) -> f64 {
        ratio(self.lexicon_oov, self.tokens)
    }
}

/// Extracts every token in parallel; output order follows input order.
pub fn extract_all(tokens: &[Token], res: &Resources<'_>) -> Result<(Vec<FeatureVector>, ExtractStats)> {
    let rows = tokens
        .par_iter()
        .map(|t| extract(t, res))
        .collect::<Result<Vec<_>>>()?;
    let mut stats = ExtractStats {
        tokens: tokens.len(),
        ..Default::default()
    };
    for t in tokens {
        if res.lexicon(&t.language)?.lookup(&t.word).was_oov {
            stats.lexicon_oov += 1;
        }
        if t.ipa.as_ref().is_some_and(|i| i.had_unmapped) {
            stats.unmapped += 1;
        }
    }
    Ok((rows, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ipa(s: &str) -> IpaString {
        IpaString::from_ipa(s)
    }

    #[test]
    fn length_examples() {
        let t = MappingTable::new("xx", vec![], Some(vec!["æ".into(), "a".into()])).unwrap();
        let (wl, il, ic, norm) = length_features("cat", &ipa("kæt"), &t);
        assert_eq!((wl, il, ic), (3, 3, 1));
        assert!((norm - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(length_features("", &ipa(""), &t), (0, 0, 0, 0.0));
        assert_eq!(length_features("aaa", &ipa("aaa"), &t), (3, 3, 3, 1.0));
    }

    #[test]
    fn profile_examples() {
        let p = ngram_profile(&ipa("abab"), 2);
        let ab = vec!["a".to_string(), "b".to_string()];
        let ba = vec!["b".to_string(), "a".to_string()];
        assert_eq!(p.grams[&ab], 2);
        assert_eq!(p.grams[&ba], 1);
        assert_eq!((p.unique(), p.total()), (2, 3));
        assert_eq!(ngram_features(&p, 4), (2, 3, 0.5));

        let short = ngram_profile(&ipa("a"), 2);
        assert_eq!(short.total(), 0);
        assert_eq!(ngram_features(&short, 1), (0, 0, 0.0));

        let tri = ngram_profile(&ipa("aaa"), 3);
        assert_eq!(tri.grams.len(), 1);
        let (c, s, n) = ngram_features(&tri, 3);
        assert_eq!((c, s), (1, 1));
        assert!((n - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn order_sensitivity() {
        let a = ngram_profile(&ipa("aabb"), 2);
        let b = ngram_profile(&ipa("abab"), 2);
        assert_ne!(a, b);
        let t = MappingTable::identity("xx");
        assert_eq!(
            length_features("aabb", &ipa("aabb"), &t),
            length_features("abab", &ipa("abab"), &t)
        );
    }
}
