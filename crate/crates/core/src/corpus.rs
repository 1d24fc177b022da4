//! Eye-tracking corpus TSV files and the feature matrix format.
//!
//! Corpus files carry the header
//! `language sentence_id word_id word FFDAvg FFDStd TRTAvg TRTStd`
//! (tab separated, label columns optional or empty on test data). An `ipa`
//! column is appended by transcription.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_NAMES, FFD_HAT};
use crate::g2p::IpaString;
use crate::models::{Dataset, RowId};

pub const ID_COLUMNS: [&str; 4] = ["language", "sentence_id", "word_id", "word"];
pub const LABEL_COLUMNS: [&str; 4] = ["FFDAvg", "FFDStd", "TRTAvg", "TRTStd"];
pub const IPA_COLUMN: &str = "ipa";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Labels {
    pub ffd_avg: f64,
    pub ffd_std: f64,
    pub trt_avg: f64,
    pub trt_std: f64,
}

impl Labels {
    pub fn get(&self, column: &str) -> Option<f64> {
        match column {
            "FFDAvg" => Some(self.ffd_avg),
            "FFDStd" => Some(self.ffd_std),
            "TRTAvg" => Some(self.trt_avg),
            "TRTStd" => Some(self.trt_std),
            _ => None,
        }
    }

    fn values(&self) -> [f64; 4] {
        [self.ffd_avg, self.ffd_std, self.trt_avg, self.trt_std]
    }
}

/// One word occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub language: String,
    pub sentence_id: String,
    pub word_id: String,
    pub word: String,
    pub ipa: Option<IpaString>,
    pub labels: Option<Labels>,
}

impl Token {
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.language, self.sentence_id, self.word_id)
    }

    pub fn row_id(&self) -> RowId {
        RowId {
            language: self.language.clone(),
            sentence_id: self.sentence_id.clone(),
            word_id: self.word_id.clone(),
        }
    }
}

/// A header plus string cells, as read from a TSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let headers: Vec<String> = match lines.next() {
            Some((_, h)) => h.split('\t').map(str::to_string).collect(),
            None => return Err(Error::parse(origin, 1, "missing header row")),
        };
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
            if cells.len() != headers.len() {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("expected {} columns, found {}", headers.len(), cells.len()),
                ));
            }
            rows.push(cells);
        }
        Ok(TsvTable { headers, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.headers.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Sets (or appends) a column.
    pub fn set_column(&mut self, name: &str, values: Vec<String>) {
        assert_eq!(values.len(), self.rows.len());
        let idx = match self.column(name) {
            Some(i) => i,
            None => {
                self.headers.push(name.to_string());
                for row in &mut self.rows {
                    row.push(String::new());
                }
                self.headers.len() - 1
            }
        };
        for (row, v) in self.rows.iter_mut().zip(values) {
            row[idx] = v;
        }
    }
}

fn parse_f64(cell: &str, origin: &Path, line: usize, column: &str) -> Result<f64> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(origin, line, format!("invalid {column} value {cell:?}"))),
    }
}

/// Parses tokens; `origin` is used for row-level diagnostics (line = row + 2).
pub fn tokens_from_table(table: &TsvTable, origin: &Path) -> Result<Vec<Token>> {
    let mut id_idx = [0usize; 4];
    for (slot, name) in id_idx.iter_mut().zip(ID_COLUMNS) {
        *slot = table
            .column(name)
            .ok_or_else(|| Error::parse(origin, 1, format!("missing column {name:?}")))?;
    }
    let label_idx: Vec<Option<usize>> = LABEL_COLUMNS.iter().map(|c| table.column(c)).collect();
    let ipa_idx = table.column(IPA_COLUMN);

    table
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let line = r + 2;
            let cells: Vec<Option<&str>> = label_idx
                .iter()
                .map(|i| i.map(|i| row[i].as_str()).filter(|c| !c.trim().is_empty()))
                .collect();
            let labels = if cells.iter().all(Option::is_some) {
                let v: Vec<f64> = cells
                    .iter()
                    .zip(LABEL_COLUMNS)
                    .map(|(c, name)| parse_f64(c.unwrap(), origin, line, name))
                    .collect::<Result<_>>()?;
                Some(Labels {
                    ffd_avg: v[0],
                    ffd_std: v[1],
                    trt_avg: v[2],
                    trt_std: v[3],
                })
            } else if cells.iter().any(Option::is_some) {
                return Err(Error::parse(origin, line, "partially filled label columns"));
            } else {
                None
            };
            Ok(Token {
                language: row[id_idx[0]].clone(),
                sentence_id: row[id_idx[1]].clone(),
                word_id: row[id_idx[2]].clone(),
                word: row[id_idx[3]].clone(),
                ipa: ipa_idx.map(|i| IpaString::from_ipa(&row[i])),
                labels,
            })
        })
        .collect()
}

pub fn read_tokens(path: &Path) -> Result<Vec<Token>> {
    tokens_from_table(&TsvTable::read(path)?, path)
}

/// Feature matrix: id columns, `ipa`, the 14 features, optional `ffd_hat`,
/// then the label columns when every token carries labels.
pub fn feature_table(tokens: &[Token], features: &[FeatureVector]) -> TsvTable {
    assert_eq!(tokens.len(), features.len());
    let with_hat = features.iter().any(|f| f.ffd_hat.is_some());
    let with_labels = !tokens.is_empty() && tokens.iter().all(|t| t.labels.is_some());

    let mut headers: Vec<String> = ID_COLUMNS.iter().map(|s| s.to_string()).collect();
    headers.push(IPA_COLUMN.into());
    headers.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    if with_hat {
        headers.push(FFD_HAT.into());
    }
    if with_labels {
        headers.extend(LABEL_COLUMNS.iter().map(|s| s.to_string()));
    }

    let rows = tokens
        .iter()
        .zip(features)
        .map(|(t, f)| {
            let mut row = vec![
                t.language.clone(),
                t.sentence_id.clone(),
                t.word_id.clone(),
                t.word.clone(),
                t.ipa.as_ref().map(|i| i.to_string()).unwrap_or_default(),
            ];
            row.extend(f.to_row().iter().map(|v| v.to_string()));
            if with_hat {
                row.push(f.ffd_hat.map(|v| v.to_string()).unwrap_or_default());
            }
            if with_labels {
                row.extend(t.labels.unwrap().values().iter().map(|v| v.to_string()));
            }
            row
        })
        .collect();
    TsvTable { headers, rows }
}

/// Builds a dataset from a feature matrix. Predictors are the 14 feature
/// columns, `ffd_hat` when present, then `extra` columns in the given order.
pub fn dataset_from_table(
    table: &TsvTable,
    origin: &Path,
    target: Option<&str>,
    extra: &[String],
) -> Result<Dataset> {
    let mut names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    if table.column(FFD_HAT).is_some() {
        names.push(FFD_HAT.to_string());
    }
    for e in extra {
        if !names.contains(e) {
            names.push(e.clone());
        }
    }
    let cols: Vec<usize> = names
        .iter()
        .map(|n| {
            table
                .column(n)
                .ok_or_else(|| Error::parse(origin, 1, format!("missing column {n:?}")))
        })
        .collect::<Result<_>>()?;
    let target_col = target
        .map(|t| {
            table
                .column(t)
                .ok_or_else(|| Error::parse(origin, 1, format!("missing target column {t:?}")))
        })
        .transpose()?;
    let id_cols: Vec<usize> = ID_COLUMNS[..3]
        .iter()
        .map(|n| {
            table
                .column(n)
                .ok_or_else(|| Error::parse(origin, 1, format!("missing column {n:?}")))
        })
        .collect::<Result<_>>()?;

    let mut x = Vec::with_capacity(table.rows.len() * names.len());
    let mut y = Vec::with_capacity(table.rows.len());
    let mut ids = Vec::with_capacity(table.rows.len());
    for (r, row) in table.rows.iter().enumerate() {
        let line = r + 2;
        for (&c, name) in cols.iter().zip(&names) {
            x.push(parse_f64(&row[c], origin, line, name)?);
        }
        y.push(match target_col {
            Some(c) => parse_f64(&row[c], origin, line, &table.headers[c])?,
            None => 0.0,
        });
        ids.push(RowId {
            language: row[id_cols[0]].clone(),
            sentence_id: row[id_cols[1]].clone(),
            word_id: row[id_cols[2]].clone(),
        });
    }
    Dataset::new(names, x, y, ids)
}

/// Writes via a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
