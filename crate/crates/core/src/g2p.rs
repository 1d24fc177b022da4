//! Rule-based grapheme-to-phoneme transduction into IPA.
//!
//! A [`MappingTable`] is an ordered set of `source → target` rewrite rules
//! for one language, applied greedily left to right with longest-match
//! lookup. Characters no rule covers are copied through unchanged and the
//! result is flagged, so transcription never fails on noisy text.
//!
//! Mapping files are UTF-8 TSV:
//!
//! ```text
//! # comment
//! sh	ʃ
//! a	æ
//! [vowels]
//! æ
//! ```
#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use unicode_normalization::char::is_combining_mark;
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

/// Vowel symbols of the IPA vowel chart, used when a mapping file does not
/// declare its own inventory.
pub const IPA_VOWELS: &[&str] = &[
    "i", "y", "ɨ", "ʉ", "ɯ", "u", "ɪ", "ʏ", "ʊ", "e", "ø", "ɘ", "ɵ", "ɤ", "o", "ə", "ɛ", "œ", "ɜ",
    "ɞ", "ʌ", "ɔ", "æ", "ɐ", "a", "ɶ", "ɑ", "ɒ",
];

const VOWELS_SECTION: &str = "[vowels]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub source: String,
    pub target: String,
}

/// Grapheme → IPA rewrite rules for one language plus its vowel inventory.
///
/// Rules are kept longest-source-first (file order among equal lengths).
/// The table is immutable once built.
#[derive(Debug, Clone)]
pub struct MappingTable {
    language: String,
    rules: Vec<Rule>,
    vowels: Vec<String>,
    vowel_set: HashSet<String>,
    declared_vowels: bool,
    index: HashMap<String, usize>,
    max_source_chars: usize,
}

impl MappingTable {
    pub fn new(
        language: impl Into<String>,
        rules: Vec<Rule>,
        vowels: Option<Vec<String>>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for rule in &rules {
            if rule.source.is_empty() {
                return Err(Error::Invalid("rule with empty source".into()));
            }
            if !seen.insert(rule.source.as_str()) {
                return Err(Error::Invalid(format!(
                    "duplicate rule source {:?}",
                    rule.source
                )));
            }
        }
        let mut rules = rules;
        rules.sort_by_key(|r| std::cmp::Reverse(r.source.chars().count()));

        let declared_vowels = vowels.is_some();
        let mut inventory = Vec::new();
        let mut vowel_set = HashSet::new();
        let listed = vowels.unwrap_or_else(|| IPA_VOWELS.iter().map(|v| v.to_string()).collect());
        for v in listed {
            if vowel_set.insert(v.clone()) {
                inventory.push(v);
            }
        }

        let index = rules
            .iter()
            .enumerate()
            .map(|(i, r)| (r.source.clone(), i))
            .collect();
        let max_source_chars = rules
            .first()
            .map(|r| r.source.chars().count())
            .unwrap_or(0);

        Ok(MappingTable {
            language: language.into(),
            rules,
            vowels: inventory,
            vowel_set,
            declared_vowels,
            index,
            max_source_chars,
        })
    }

    /// Table with no rules: every character passes through.
    pub fn identity(language: impl Into<String>) -> Self {
        Self::new(language, Vec::new(), None).expect("empty table is valid")
    }

    /// Parses mapping-file text. `origin` is only used in error messages.
    pub fn parse(language: impl Into<String>, text: &str, origin: &Path) -> Result<Self> {
        let mut rules = Vec::new();
        let mut vowels: Option<Vec<String>> = None;
        let mut sources: HashMap<String, usize> = HashMap::new();

        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.trim() == VOWELS_SECTION {
                vowels.get_or_insert_with(Vec::new);
                continue;
            }
            if let Some(inventory) = vowels.as_mut() {
                let symbol = line.trim();
                if symbol.contains('\t') || symbol.contains(' ') {
                    return Err(Error::parse(origin, lineno, "expected one vowel symbol per line"));
                }
                inventory.push(symbol.to_string());
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected 2 tab-separated columns, found {}", cols.len()),
                ));
            }
            let (source, target) = (cols[0], cols[1]);
            if source.is_empty() {
                return Err(Error::parse(origin, lineno, "empty rule source"));
            }
            if let Some(first) = sources.insert(source.to_string(), lineno) {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("duplicate source {source:?} (first defined on line {first})"),
                ));
            }
            rules.push(Rule {
                source: source.to_string(),
                target: target.to_string(),
            });
        }
        Self::new(language, rules, vowels)
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn vowels(&self) -> &[String] {
        &self.vowels
    }

    pub fn is_vowel(&self, phoneme: &str) -> bool {
        self.vowel_set.contains(phoneme) || self.vowel_set.contains(&base_symbol(phoneme))
    }

    /// Canonical mapping-file text. Loading a canonical file and writing it
    /// back reproduces the same bytes.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&rule.source);
            out.push('\t');
            out.push_str(&rule.target);
            out.push('\n');
        }
        if self.declared_vowels {
            out.push_str(VOWELS_SECTION);
            out.push('\n');
            for v in &self.vowels {
                out.push_str(v);
                out.push('\n');
            }
        }
        out
    }

    /// Greedy left-to-right longest-match transcription.
    pub fn transcribe(&self, word: &str) -> IpaString {
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let n_chars = bounds.len() - 1;

        let mut out = String::with_capacity(word.len() * 2);
        let mut had_unmapped = false;
        let mut pos = 0;
        while pos < n_chars {
            let longest = self.max_source_chars.min(n_chars - pos);
            let hit = (1..=longest).rev().find_map(|len| {
                let candidate = &word[bounds[pos]..bounds[pos + len]];
                self.index.get(candidate).map(|&r| (len, r))
            });
            match hit {
                Some((len, r)) => {
                    out.push_str(&self.rules[r].target);
                    pos += len;
                }
                None => {
                    out.push_str(&word[bounds[pos]..bounds[pos + 1]]);
                    had_unmapped = true;
                    pos += 1;
                }
            }
        }
        IpaString {
            phonemes: segment(&out),
            had_unmapped,
        }
    }
}

/// Reads a mapping file; the language tag is the file stem.
pub fn load_mapping(path: &Path) -> Result<MappingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let language = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    MappingTable::parse(language, &text, path)
}

pub fn transcribe(word: &str, table: &MappingTable) -> IpaString {
    table.transcribe(word)
}

/// A transcribed word. Each phoneme is one extended grapheme cluster, so
/// combining diacritics stay attached to their base symbol.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IpaString {
    pub phonemes: Vec<String>,
    pub had_unmapped: bool,
}

impl IpaString {
    /// Segments an already-transcribed IPA string.
    pub fn from_ipa(ipa: &str) -> Self {
        IpaString {
            phonemes: segment(ipa),
            had_unmapped: false,
        }
    }

    pub fn from_phonemes<S: Into<String>>(phonemes: impl IntoIterator<Item = S>) -> Self {
        IpaString {
            phonemes: phonemes.into_iter().map(Into::into).collect(),
            had_unmapped: false,
        }
    }

    pub fn len(&self) -> usize {
        self.phonemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phonemes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.phonemes.iter().map(String::as_str)
    }
}

impl fmt::Display for IpaString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.phonemes {
            f.write_str(p)?;
        }
        Ok(())
    }
}

fn segment(s: &str) -> Vec<String> {
    s.graphemes(true).map(str::to_string).collect()
}

/// Phoneme with combining marks removed.
pub fn base_symbol(phoneme: &str) -> String {
    phoneme.chars().filter(|c| !is_combining_mark(*c)).collect()
}

pub fn count_vowels(ipa: &IpaString, table: &MappingTable) -> usize {
    ipa.iter().filter(|p| table.is_vowel(p)).count()
}

/// Lowercases and strips leading/trailing punctuation, keeping everything
/// between the first and last word character.
pub fn normalize_word(raw: &str) -> String {
    let keep = |c: char| c.is_alphanumeric() || is_combining_mark(c);
    raw.trim_matches(|c: char| !keep(c)).to_lowercase()
}
