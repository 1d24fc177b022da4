//! Ridge-stabilised least squares on standardised features, with optional
//! AIC-driven attribute elimination.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::scaling::Standard;
use super::{Dataset, Predictor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    None,
    /// Backward elimination: drop whichever feature lowers AIC the most.
    Greedy,
    /// Drop the feature with the smallest standardised coefficient while
    /// AIC improves.
    #[default]
    M5,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selection::None => "none",
            Selection::Greedy => "greedy",
            Selection::M5 => "m5",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinRegParams {
    pub selection: Selection,
    pub ridge: f64,
}

impl Default for LinRegParams {
    fn default() -> Self {
        LinRegParams {
            selection: Selection::M5,
            ridge: 1e-8,
        }
    }
}

impl LinRegParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::Invalid(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinRegModel {
    pub scaling: Standard,
    /// Indices of the retained features.
    pub selected: Vec<usize>,
    /// Coefficients on standardised features, aligned with `selected`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinRegModel {
    /// Constant model (all coefficients zero).
    pub fn constant(n_features: usize, intercept: f64) -> Self {
        LinRegModel {
            scaling: Standard {
                mean: vec![0.0; n_features],
                std: vec![1.0; n_features],
            },
            selected: Vec::new(),
            coefficients: Vec::new(),
            intercept,
        }
    }

    /// Coefficients and intercept on the raw feature scale; dropped
    /// features get 0.
    pub fn raw_coefficients(&self) -> (Vec<f64>, f64) {
        let mut coef = vec![0.0; self.scaling.mean.len()];
        let mut intercept = self.intercept;
        for (&j, &b) in self.selected.iter().zip(&self.coefficients) {
            coef[j] = b / self.scaling.std[j];
            intercept -= coef[j] * self.scaling.mean[j];
        }
        (coef, intercept)
    }
}

impl Predictor for LinRegModel {
    fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let z = self.scaling.apply(row);
        Ok(self.intercept
            + self
                .selected
                .iter()
                .zip(&self.coefficients)
                .map(|(&j, b)| b * z[j])
                .sum::<f64>())
    }
}

struct Fit {
    coefficients: Vec<f64>,
    aic: f64,
}

struct Problem {
    z: Vec<Vec<f64>>, // standardised columns
    yc: Vec<f64>,
    ridge: f64,
    mse_floor: f64,
}

impl Problem {
    fn fit(&self, cols: &[usize]) -> Result<Fit> {
        let n = self.yc.len();
        let k = cols.len();
        if self.ridge == 0.0 && k > 0 && n <= k {
            return Err(Error::Singular(format!(
                "{n} rows cannot determine {k} coefficients without ridge"
            )));
        }
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for (p, &cp) in cols.iter().enumerate() {
            for (q, &cq) in cols.iter().enumerate().skip(p) {
                let s: f64 = self.z[cp].iter().zip(&self.z[cq]).map(|(u, v)| u * v).sum();
                a[p][q] = s;
                a[q][p] = s;
            }
            a[p][p] += self.ridge;
            b[p] = self.z[cp].iter().zip(&self.yc).map(|(u, v)| u * v).sum();
        }
        let coefficients = solve(a, b)?;

        let rss: f64 = (0..n)
            .map(|i| {
                let fitted: f64 = cols
                    .iter()
                    .zip(&coefficients)
                    .map(|(&c, w)| w * self.z[c][i])
                    .sum();
                let r = self.yc[i] - fitted;
                r * r
            })
            .sum();
        let nf = n as f64;
        let aic = nf * (rss / nf).max(self.mse_floor).ln() + 2.0 * (k as f64 + 1.0);
        Ok(Fit { coefficients, aic })
    }
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let k = b.len();
    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()).then(j.cmp(&i)))
            .unwrap();
        if a[pivot][col].abs() <= 1e-12 * scale {
            return Err(Error::Singular(format!("pivot {col} vanishes")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..k {
                    a[row][c] -= factor * a[col][c];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

pub fn train(data: &Dataset, params: &LinRegParams) -> Result<LinRegModel> {
    params.validate()?;
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::Invalid("cannot fit linear regression on an empty dataset".into()));
    }
    let scaling = Standard::fit(data);
    let z: Vec<Vec<f64>> = (0..data.n_cols())
        .map(|j| {
            data.column(j)
                .iter()
                .map(|v| (v - scaling.mean[j]) / scaling.std[j])
                .collect()
        })
        .collect();
    let y_mean = data.y().iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = data.y().iter().map(|v| v - y_mean).collect();
    let y_var = yc.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let problem = Problem {
        z,
        yc,
        ridge: params.ridge,
        mse_floor: (1e-12 * y_var).max(f64::MIN_POSITIVE),
    };

    let mut selected: Vec<usize> = (0..data.n_cols()).collect();
    let mut current = problem.fit(&selected)?;
    loop {
        if selected.is_empty() {
            break;
        }
        let candidate = match params.selection {
            Selection::None => break,
            Selection::Greedy => {
                let mut best: Option<(usize, Fit)> = None;
                for drop in 0..selected.len() {
                    let cols = without(&selected, drop);
                    let fit = problem.fit(&cols)?;
                    if best.as_ref().is_none_or(|(_, b)| fit.aic < b.aic) {
                        best = Some((drop, fit));
                    }
                }
                best.unwrap()
            }
            Selection::M5 => {
                let drop = current
                    .coefficients
                    .iter()
                    .enumerate()
                    .min_by(|(i, a), (j, b)| a.abs().total_cmp(&b.abs()).then(i.cmp(j)))
                    .map(|(i, _)| i)
                    .unwrap();
                let fit = problem.fit(&without(&selected, drop))?;
                (drop, fit)
            }
        };
        let (drop, fit) = candidate;
        if fit.aic < current.aic {
            selected.remove(drop);
            current = fit;
        } else {
            break;
        }
    }

    Ok(LinRegModel {
        scaling,
        selected,
        coefficients: current.coefficients,
        intercept: y_mean,
    })
}

fn without(cols: &[usize], pos: usize) -> Vec<usize> {
    let mut v = cols.to_vec();
    v.remove(pos);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn recovers_noiseless_line() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 * 0.37 - 5.0]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let d = Dataset::from_rows(names(1), &rows, y).unwrap();
        let params = LinRegParams {
            selection: Selection::None,
            ..Default::default()
        };
        let m = train(&d, &params).unwrap();
        let (coef, b) = m.raw_coefficients();
        assert!((coef[0] - 2.0).abs() < 1e-6, "{coef:?}");
        assert!((b - 1.0).abs() < 1e-6, "{b}");
    }

    #[test]
    fn underdetermined_without_ridge() {
        let rows = vec![vec![1.0; 14], (0..14).map(|v| v as f64).collect()];
        let d = Dataset::from_rows(names(14), &rows, vec![1.0, 2.0]).unwrap();
        let params = LinRegParams {
            selection: Selection::None,
            ridge: 0.0,
        };
        assert!(matches!(train(&d, &params), Err(Error::Singular(_))));
    }

    #[test]
    fn constant_model_predicts_intercept() {
        let m = LinRegModel::constant(3, 42.5);
        assert_eq!(m.predict_row(&[1.0, -7.0, 1e6]).unwrap(), 42.5);
    }

    #[test]
    fn exact_target_drops_irrelevant_feature() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![i as f64, ((i * 7919) % 61) as f64])
            .collect();
        let y = rows.iter().map(|r| r[0]).collect();
        let d = Dataset::from_rows(names(2), &rows, y).unwrap();
        for selection in [Selection::Greedy, Selection::M5] {
            let m = train(&d, &LinRegParams { selection, ridge: 1e-8 }).unwrap();
            assert_eq!(m.selected, [0], "{selection}");
        }
    }

    #[test]
    fn solve_small_system() {
        let x = solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_err());
    }
}
