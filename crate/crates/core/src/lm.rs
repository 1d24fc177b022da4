//! Character n-gram language model over IPA phonemes, plus the
//! information-theoretic word features built on it.
//!
//! Words are padded with `order - 1` start markers and one end marker. The
//! conditional estimate is add-alpha smoothed over the outcome set
//! `vocab ∪ {UNK}`, where `vocab` contains every trained phoneme and the end
//! marker:
//!
//! ```text
//! P(s | ctx) = (C(ctx s) + alpha) / (C(ctx) + alpha * (|vocab| + 1))
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g2p::IpaString;

pub const START: &str = "^";
pub const END: &str = "$";
/// Stands for phonemes outside the vocabulary. Literal phonemes equal to a
/// reserved marker are also mapped here.
pub const UNK: &str = "<unk>";

pub const LM_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.1;

type Gram = Vec<String>;

#[derive(Debug, Clone, PartialEq)]
pub struct CharNgramLm {
    order: usize,
    alpha: f64,
    vocab: BTreeSet<String>,
    gram_counts: BTreeMap<Gram, u64>,
    context_counts: BTreeMap<Gram, u64>,
}

fn reserved(p: &str) -> bool {
    p == START || p == END || p == UNK
}

impl CharNgramLm {
    pub fn train<'a>(
        corpus: impl IntoIterator<Item = &'a IpaString>,
        order: usize,
        alpha: f64,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("LM order must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Invalid(format!("LM alpha must be positive, got {alpha}")));
        }
        let mut lm = CharNgramLm {
            order,
            alpha,
            vocab: BTreeSet::new(),
            gram_counts: BTreeMap::new(),
            context_counts: BTreeMap::new(),
        };
        lm.vocab.insert(END.to_string());

        let mut words = 0usize;
        for word in corpus {
            words += 1;
            for p in word.iter().filter(|p| !reserved(p)) {
                if !lm.vocab.contains(p) {
                    lm.vocab.insert(p.to_string());
                }
            }
            let padded = lm.pad(word, |p| if reserved(p) { UNK } else { p });
            for window in padded.windows(order) {
                let gram: Gram = window.iter().map(|s| s.to_string()).collect();
                let context = gram[..order - 1].to_vec();
                *lm.gram_counts.entry(gram).or_insert(0) += 1;
                *lm.context_counts.entry(context).or_insert(0) += 1;
            }
        }
        if words == 0 {
            return Err(Error::Invalid("cannot train LM on an empty corpus".into()));
        }
        Ok(lm)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Outcome symbols excluding UNK (includes the end marker).
    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    pub fn gram_count(&self, gram: &[&str]) -> u64 {
        let key: Gram = gram.iter().map(|s| s.to_string()).collect();
        self.gram_counts.get(&key).copied().unwrap_or(0)
    }

    pub fn context_count(&self, context: &[&str]) -> u64 {
        let key: Gram = context.iter().map(|s| s.to_string()).collect();
        self.context_counts.get(&key).copied().unwrap_or(0)
    }

    /// Contexts observed during training.
    pub fn contexts(&self) -> impl Iterator<Item = Vec<&str>> {
        self.context_counts
            .keys()
            .map(|c| c.iter().map(String::as_str).collect())
    }

    fn pad<'w>(&self, word: &'w IpaString, map: impl Fn(&'w str) -> &'w str) -> Vec<&'w str> {
        let mut seq = Vec::with_capacity(word.len() + self.order);
        seq.extend(std::iter::repeat_n(START, self.order - 1));
        seq.extend(word.iter().map(map));
        seq.push(END);
        seq
    }

    fn scoring_symbol<'w>(&self, p: &'w str) -> &'w str {
        if reserved(p) || !self.vocab.contains(p) {
            UNK
        } else {
            p
        }
    }

    /// Smoothed conditional probability of `symbol` after `context`
    /// (`context` must hold `order - 1` symbols).
    pub fn prob(&self, context: &[&str], symbol: &str) -> f64 {
        debug_assert_eq!(context.len(), self.order - 1);
        let mut gram: Gram = context.iter().map(|s| s.to_string()).collect();
        let ctx_count = self.context_counts.get(&gram).copied().unwrap_or(0);
        gram.push(symbol.to_string());
        let count = self.gram_counts.get(&gram).copied().unwrap_or(0);
        let outcomes = (self.vocab.len() + 1) as f64;
        (count as f64 + self.alpha) / (ctx_count as f64 + self.alpha * outcomes)
    }

    /// Full conditional distribution over `vocab ∪ {UNK}`.
    pub fn distribution(&self, context: &[&str]) -> Vec<(String, f64)> {
        self.vocab
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(UNK))
            .map(|s| (s.to_string(), self.prob(context, s)))
            .collect()
    }

    /// Total surprisal in bits of the word, end marker included.
    pub fn surprisal(&self, ipa: &IpaString) -> f64 {
        let seq = self.pad(ipa, |p| self.scoring_symbol(p));
        seq.windows(self.order)
            .map(|w| -self.prob(&w[..self.order - 1], w[self.order - 1]).log2())
            .sum()
    }

    /// Bits per phoneme; 0 for empty words.
    pub fn phonotactic_complexity(&self, ipa: &IpaString) -> f64 {
        if ipa.is_empty() {
            0.0
        } else {
            self.surprisal(ipa) / ipa.len() as f64
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = LmDocument {
            format_version: LM_FORMAT_VERSION,
            order: self.order,
            alpha: self.alpha,
            vocab: self.vocab.iter().cloned().collect(),
            gram_counts: self.gram_counts.iter().map(|(g, c)| (g.clone(), *c)).collect(),
            context_counts: self
                .context_counts
                .iter()
                .map(|(g, c)| (g.clone(), *c))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LmDocument = serde_json::from_str(text)?;
        if doc.format_version != LM_FORMAT_VERSION {
            return Err(Error::Version {
                found: doc.format_version,
                expected: LM_FORMAT_VERSION,
            });
        }
        if doc.order == 0 || doc.alpha.is_nan() || doc.alpha <= 0.0 {
            return Err(Error::Invalid("corrupt LM document: order/alpha".into()));
        }
        let lm = CharNgramLm {
            order: doc.order,
            alpha: doc.alpha,
            vocab: doc.vocab.into_iter().collect(),
            gram_counts: doc.gram_counts.into_iter().collect(),
            context_counts: doc.context_counts.into_iter().collect(),
        };
        if lm.gram_counts.keys().any(|g| g.len() != lm.order)
            || lm.context_counts.keys().any(|c| c.len() + 1 != lm.order)
        {
            return Err(Error::Invalid("corrupt LM document: gram length".into()));
        }
        Ok(lm)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct LmDocument {
    format_version: u32,
    order: usize,
    alpha: f64,
    vocab: Vec<String>,
    gram_counts: Vec<(Gram, u64)>,
    context_counts: Vec<(Gram, u64)>,
}

pub fn train_lm<'a>(
    corpus: impl IntoIterator<Item = &'a IpaString>,
    order: usize,
    alpha: f64,
) -> Result<CharNgramLm> {
    CharNgramLm::train(corpus, order, alpha)
}

/// Shannon entropy (bits) of the word's own phoneme distribution.
pub fn entropy(ipa: &IpaString) -> f64 {
    let n = ipa.len();
    if n == 0 {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in ipa.iter() {
        *counts.entry(p).or_insert(0) += 1;
    }
    let h: f64 = counts
        .values()
        .map(|&c| {
            let q = c as f64 / n as f64;
            -q * q.log2()
        })
        .sum();
    // a single symbol type gives -1*log2(1) = -0.0
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> IpaString {
        IpaString::from_ipa(s)
    }

    #[test]
    fn bigram_counts_with_boundaries() {
        let corpus = [w("ab"), w("ab")];
        let lm = train_lm(&corpus, 2, 0.1).unwrap();
        assert_eq!(lm.gram_count(&["^", "a"]), 2);
        assert_eq!(lm.gram_count(&["a", "b"]), 2);
        assert_eq!(lm.gram_count(&["b", "$"]), 2);
        assert_eq!(lm.gram_counts.len(), 3);
        assert_eq!(lm.context_count(&["a"]), 2);
    }

    #[test]
    fn short_word_high_order() {
        let corpus = [w("a")];
        let lm = train_lm(&corpus, 3, 0.1).unwrap();
        assert_eq!(lm.gram_count(&["^", "^", "a"]), 1);
        assert_eq!(lm.gram_count(&["^", "a", "$"]), 1);
        assert_eq!(lm.gram_counts.len(), 2);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(train_lm(&[w("a")], 2, 0.0).is_err());
        assert!(train_lm(&[w("a")], 0, 0.1).is_err());
        let empty: [IpaString; 0] = [];
        assert!(train_lm(&empty, 2, 0.1).is_err());
    }

    #[test]
    fn surprisal_examples() {
        let corpus = vec![w("ab"); 100];
        let lm = train_lm(&corpus, 2, 0.01).unwrap();
        let ab = lm.surprisal(&w("ab"));
        let ba = lm.surprisal(&w("ba"));
        assert!(ab > 0.0 && ab < 0.01, "{ab}");
        assert!(ba > ab);

        let empty = lm.surprisal(&IpaString::default());
        assert_eq!(empty, -lm.prob(&["^"], "$").log2());

        let unseen = lm.surprisal(&w("zzq"));
        assert!(unseen.is_finite() && unseen > 0.0);
    }

    #[test]
    fn complexity_is_ratio() {
        let lm = train_lm(&[w("abc"), w("bca")], 3, 0.1).unwrap();
        let word = w("abca");
        assert_eq!(lm.phonotactic_complexity(&word), lm.surprisal(&word) / 4.0);
        assert_eq!(lm.phonotactic_complexity(&IpaString::default()), 0.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&w("aaaa")), 0.0);
        assert_eq!(entropy(&w("ab")), 1.0);
        assert!((entropy(&w("aab")) - 0.918_295_834_054_489_6).abs() < 1e-12);
        assert_eq!(entropy(&IpaString::default()), 0.0);
    }

    #[test]
    fn reserved_symbols_become_unk() {
        let lm = train_lm(&[IpaString::from_phonemes(["a", "$", "b"])], 2, 0.1).unwrap();
        assert!(!lm.vocab().any(|v| v == UNK));
        assert_eq!(lm.gram_count(&["a", UNK]), 1);
        let total: f64 = lm.distribution(&["a"]).iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_version() {
        let lm = train_lm(&[w("kæt"), w("tæk"), w("æ")], 3, 0.1).unwrap();
        let back = CharNgramLm::from_json(&lm.to_json().unwrap()).unwrap();
        assert_eq!(back, lm);
        let probe = w("kæk");
        assert_eq!(back.surprisal(&probe).to_bits(), lm.surprisal(&probe).to_bits());

        let bumped = lm.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(CharNgramLm::from_json(&bumped), Err(Error::Version { found: 9, .. })));
    }
}
