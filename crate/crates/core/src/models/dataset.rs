use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(language, sentence_id, word_id)` of one row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowId {
    pub language: String,
    pub sentence_id: String,
    pub word_id: String,
}

/// Row-major feature matrix with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    x: Vec<f64>,
    y: Vec<f64>,
    row_ids: Vec<RowId>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        x: Vec<f64>,
        y: Vec<f64>,
        row_ids: Vec<RowId>,
    ) -> Result<Self> {
        let p = feature_names.len();
        if p == 0 {
            return Err(Error::Invalid("dataset has no features".into()));
        }
        if x.len() != y.len() * p || row_ids.len() != y.len() {
            return Err(Error::Invalid(format!(
                "dataset shape mismatch: {} cells, {} targets, {} ids, {} features",
                x.len(),
                y.len(),
                row_ids.len(),
                p
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("dataset contains non-finite values".into()));
        }
        Ok(Dataset {
            feature_names,
            x,
            y,
            row_ids,
        })
    }

    /// Dataset with synthetic row ids `("", "", i)`.
    pub fn from_rows(feature_names: Vec<String>, rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let ids = (0..rows.len())
            .map(|i| RowId {
                language: String::new(),
                sentence_id: String::new(),
                word_id: i.to_string(),
            })
            .collect();
        Self::new(feature_names, rows.concat(), y, ids)
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let p = self.n_cols();
        let mut x = Vec::with_capacity(rows.len() * p);
        for &r in rows {
            x.extend_from_slice(self.row(r));
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            x,
            y: rows.iter().map(|&r| self.y[r]).collect(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
        }
    }

    pub fn with_target(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.feature_names.clone(), self.x.clone(), y, self.row_ids.clone())
    }

    /// Appends a feature column.
    pub fn with_feature(&self, name: &str, values: &[f64]) -> Result<Dataset> {
        if values.len() != self.n_rows() {
            return Err(Error::Invalid(format!(
                "column {name:?} has {} values for {} rows",
                values.len(),
                self.n_rows()
            )));
        }
        let p = self.n_cols();
        let mut x = Vec::with_capacity(self.n_rows() * (p + 1));
        for (i, v) in values.iter().enumerate() {
            x.extend_from_slice(self.row(i));
            x.push(*v);
        }
        let mut names = self.feature_names.clone();
        names.push(name.to_string());
        Dataset::new(names, x, self.y.clone(), self.row_ids.clone())
    }

    /// Rows reordered by row id; returns the dataset and the permutation used.
    pub fn canonical(&self) -> (Dataset, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.n_rows()).collect();
        order.sort_by(|&a, &b| self.row_ids[a].cmp(&self.row_ids[b]).then(a.cmp(&b)));
        (self.subset(&order), order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn shape_checks() {
        assert!(Dataset::from_rows(names(2), &[vec![1.0, 2.0]], vec![1.0]).is_ok());
        assert!(Dataset::from_rows(names(2), &[vec![1.0]], vec![1.0]).is_err());
        assert!(Dataset::from_rows(names(1), &[vec![f64::NAN]], vec![1.0]).is_err());
        assert!(Dataset::from_rows(vec![], &[], vec![]).is_err());
    }

    #[test]
    fn subset_and_extend() {
        let d = Dataset::from_rows(names(2), &[vec![1.0, 2.0], vec![3.0, 4.0]], vec![5.0, 6.0]).unwrap();
        let s = d.subset(&[1]);
        assert_eq!(s.row(0), [3.0, 4.0]);
        assert_eq!(s.y(), [6.0]);
        let e = d.with_feature("h", &[7.0, 8.0]).unwrap();
        assert_eq!(e.row(1), [3.0, 4.0, 8.0]);
        assert_eq!(e.feature_names()[2], "h");
        assert_eq!(d.column(1), [2.0, 4.0]);
    }
}
