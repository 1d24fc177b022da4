//! Imageability and concreteness scores per language.
//!
//! Lexicon files are TSV rows `word<TAB>imageability<TAB>concreteness`,
//! with `#` comment lines. Words are keyed by [`normalize_word`]. Lookups of
//! unknown words fall back to the lexicon-wide mean of each score.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::g2p::normalize_word;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub imageability: f64,
    pub concreteness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub imageability: f64,
    pub concreteness: f64,
    pub was_oov: bool,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    language: String,
    entries: HashMap<String, Scores>,
    means: Scores,
    duplicate_warnings: usize,
}

impl Lexicon {
    pub fn from_entries(
        language: impl Into<String>,
        entries: impl IntoIterator<Item = (String, Scores)>,
    ) -> Result<Self> {
        let mut map = HashMap::new();
        let mut duplicates = 0;
        for (word, scores) in entries {
            if !(scores.imageability.is_finite() && scores.concreteness.is_finite()) {
                return Err(Error::Invalid(format!("non-finite score for {word:?}")));
            }
            if map.insert(normalize_word(&word), scores).is_some() {
                duplicates += 1;
            }
        }
        Self::build(language.into(), map, duplicates)
    }

    fn build(language: String, entries: HashMap<String, Scores>, duplicates: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Invalid(format!("lexicon for {language:?} is empty")));
        }
        // sorted keys keep the float sum independent of hash order
        let mut words: Vec<&String> = entries.keys().collect();
        words.sort();
        let n = words.len() as f64;
        let (img, conc) = words.iter().fold((0.0, 0.0), |(i, c), w| {
            let s = &entries[*w];
            (i + s.imageability, c + s.concreteness)
        });
        let means = Scores {
            imageability: img / n,
            concreteness: conc / n,
        };
        Ok(Lexicon {
            language,
            entries,
            means,
            duplicate_warnings: duplicates,
        })
    }

    pub fn parse(language: impl Into<String>, text: &str, origin: &Path) -> Result<Self> {
        let language = language.into();
        let mut entries = HashMap::new();
        let mut duplicates = 0;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected 3 tab-separated columns, found {}", cols.len()),
                ));
            }
            let score = |col: &str, name: &str| -> Result<f64> {
                match col.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::parse(origin, lineno, format!("invalid {name} score {col:?}"))),
                }
            };
            let scores = Scores {
                imageability: score(cols[1], "imageability")?,
                concreteness: score(cols[2], "concreteness")?,
            };
            let word = normalize_word(cols[0]);
            if entries.insert(word.clone(), scores).is_some() {
                warn!("{}:{lineno}: duplicate lexicon word {word:?}, keeping last", origin.display());
                duplicates += 1;
            }
        }
        Self::build(language, entries, duplicates)
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn means(&self) -> Scores {
        self.means
    }

    pub fn duplicate_warnings(&self) -> usize {
        self.duplicate_warnings
    }

    pub fn lookup(&self, word: &str) -> Lookup {
        match self.entries.get(&normalize_word(word)) {
            Some(s) => Lookup {
                imageability: s.imageability,
                concreteness: s.concreteness,
                was_oov: false,
            },
            None => Lookup {
                imageability: self.means.imageability,
                concreteness: self.means.concreteness,
                was_oov: true,
            },
        }
    }
}

pub fn load_lexicon(path: &Path, language: &str) -> Result<Lexicon> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::parse(language, &text, path)
}
