use serde::{Deserialize, Serialize};

use super::scaling::MinMax;
use super::{Dataset, Predictor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
    pub distance: Distance,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: 5,
            distance: Distance::Euclidean,
        }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Invalid("knn k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Stored min-max scaled training rows; prediction is the unweighted mean
/// target of the `k` nearest rows, distance ties going to the lower index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub scaling: MinMax,
    pub n_features: usize,
    pub points: Vec<f64>,
    pub targets: Vec<f64>,
}

impl KnnModel {
    /// Indices of the `k` nearest stored rows, nearest first.
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let q = self.scaling.apply(row);
        let mut dist: Vec<(f64, usize)> = self
            .points
            .chunks_exact(self.n_features)
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }
}

impl Predictor for KnnModel {
    fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let nn = self.neighbours(row);
        Ok(nn.iter().map(|&i| self.targets[i]).sum::<f64>() / nn.len() as f64)
    }
}

pub fn train(data: &Dataset, params: &KnnParams) -> Result<KnnModel> {
    params.validate()?;
    if params.k > data.n_rows() {
        return Err(Error::Invalid(format!(
            "knn k={} exceeds {} training rows",
            params.k,
            data.n_rows()
        )));
    }
    let scaling = MinMax::fit(data);
    let mut points = Vec::with_capacity(data.n_rows() * data.n_cols());
    for i in 0..data.n_rows() {
        points.extend(scaling.apply(data.row(i)));
    }
    Ok(KnnModel {
        k: params.k,
        scaling,
        n_features: data.n_cols(),
        points,
        targets: data.y().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: &[Vec<f64>], y: &[f64]) -> Dataset {
        let names = (0..rows[0].len()).map(|i| format!("f{i}")).collect();
        Dataset::from_rows(names, rows, y.to_vec()).unwrap()
    }

    #[test]
    fn memorises_with_k1() {
        let d = data(&[vec![0.0, 1.0], vec![3.0, 2.0], vec![5.0, 9.0]], &[10.0, 20.0, 30.0]);
        let m = train(&d, &KnnParams { k: 1, ..Default::default() }).unwrap();
        assert_eq!(m.predict_row(&[3.0, 2.0]).unwrap(), 20.0);
    }

    #[test]
    fn all_rows_give_global_mean() {
        let d = data(&[vec![0.0], vec![1.0], vec![7.0]], &[1.0, 2.0, 6.0]);
        let m = train(&d, &KnnParams { k: 3, ..Default::default() }).unwrap();
        assert_eq!(m.predict_row(&[100.0]).unwrap(), 3.0);
        assert_eq!(m.predict_row(&[-4.0]).unwrap(), 3.0);
    }

    #[test]
    fn colinear_midpoint() {
        // x = 0, 1, 3; query 0.4 is 0.4 and 0.6 from the first two, 2.6 from the third
        let d = data(&[vec![0.0], vec![1.0], vec![3.0]], &[10.0, 20.0, 50.0]);
        let m = train(&d, &KnnParams { k: 2, ..Default::default() }).unwrap();
        assert_eq!(m.predict_row(&[0.4]).unwrap(), 15.0);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let d = data(&[vec![2.0], vec![0.0], vec![4.0]], &[1.0, 2.0, 3.0]);
        let m = train(&d, &KnnParams { k: 1, ..Default::default() }).unwrap();
        // 1.0 and 3.0 are equidistant from rows 0/1 and 0/2
        assert_eq!(m.neighbours(&[1.0]), [0]);
        assert_eq!(m.neighbours(&[3.0]), [0]);
    }

    #[test]
    fn k_larger_than_rows_rejected() {
        let d = data(&[vec![0.0], vec![1.0]], &[1.0, 2.0]);
        assert!(train(&d, &KnnParams { k: 3, ..Default::default() }).is_err());
    }
}
