//! Bagged regression trees with per-split random feature subsets.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, Predictor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub trees: usize,
    /// Fraction of features considered at each split.
    pub feat_fraction: f64,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            trees: 100,
            feat_fraction: 1.0,
            min_leaf: 1,
            bootstrap: true,
        }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::Invalid("rf needs at least one tree".into()));
        }
        if !(self.feat_fraction > 0.0 && self.feat_fraction <= 1.0) {
            return Err(Error::Invalid(format!(
                "rf feat_fraction must be in (0, 1], got {}",
                self.feat_fraction
            )));
        }
        if self.min_leaf == 0 {
            return Err(Error::Invalid("rf min_leaf must be at least 1".into()));
        }
        Ok(())
    }

    pub fn features_per_split(&self, n_features: usize) -> usize {
        ((self.feat_fraction * n_features as f64).ceil() as usize).clamp(1, n_features)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn tree_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(row)).collect()
    }

    /// How often each feature is used as a split variable.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_features];
        for node in self.trees.iter().flat_map(|t| &t.nodes) {
            if let Node::Split { feature, .. } = node {
                counts[*feature] += 1;
            }
        }
        counts
    }
}

impl Predictor for Forest {
    fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        Ok(sum / self.trees.len() as f64)
    }
}

struct Grower<'a> {
    data: &'a Dataset,
    params: &'a RfParams,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    /// Row index of each bootstrap draw.
    draws: Vec<usize>,
    goes_left: Vec<bool>,
}

/// Draws reaching a node: `order` in bootstrap order, plus one list per
/// feature sorted by value (ties in bootstrap order).
struct NodeRows {
    order: Vec<usize>,
    by_feature: Vec<Vec<usize>>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
}

impl Grower<'_> {
    fn y(&self, draw: usize) -> f64 {
        self.data.y()[self.draws[draw]]
    }

    fn x(&self, draw: usize, feature: usize) -> f64 {
        self.data.value(self.draws[draw], feature)
    }

    fn leaf(&mut self, draws: &[usize]) -> usize {
        let value = draws.iter().map(|&d| self.y(d)).sum::<f64>() / draws.len() as f64;
        self.nodes.push(Node::Leaf {
            value,
            samples: draws.len(),
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, node: NodeRows) -> usize {
        let first = self.y(node.order[0]);
        if node.order.len() < 2 * self.params.min_leaf
            || node.order.iter().all(|&d| self.y(d) == first)
        {
            return self.leaf(&node.order);
        }
        let Some(best) = self.best_split(&node) else {
            return self.leaf(&node.order);
        };
        for &d in &node.order {
            self.goes_left[d] = self.x(d, best.feature) <= best.threshold;
        }
        let split = |list: Vec<usize>, goes_left: &[bool]| -> (Vec<usize>, Vec<usize>) {
            list.into_iter().partition(|&d| goes_left[d])
        };
        let (l_order, r_order) = split(node.order, &self.goes_left);
        let (mut l_by, mut r_by) = (Vec::new(), Vec::new());
        for list in node.by_feature {
            let (l, r) = split(list, &self.goes_left);
            l_by.push(l);
            r_by.push(r);
        }

        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: 0.0,
            samples: 0,
        });
        let left = self.grow(NodeRows {
            order: l_order,
            by_feature: l_by,
        });
        let right = self.grow(NodeRows {
            order: r_order,
            by_feature: r_by,
        });
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }

    fn best_split(&mut self, node: &NodeRows) -> Option<BestSplit> {
        let p = self.data.n_cols();
        let mut features = sample(&mut self.rng, p, self.mtry).into_vec();
        features.sort_unstable();

        let n = node.order.len();
        let total: f64 = node.order.iter().map(|&d| self.y(d)).sum();
        let parent_score = total * total / n as f64;
        let min_leaf = self.params.min_leaf;

        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &features {
            let sorted = &node.by_feature[f];
            let mut left_sum = 0.0;
            for i in 1..n {
                left_sum += self.y(sorted[i - 1]);
                let (lo, hi) = (self.x(sorted[i - 1], f), self.x(sorted[i], f));
                if i < min_leaf || n - i < min_leaf || lo == hi {
                    continue;
                }
                let right_sum = total - left_sum;
                let score =
                    left_sum * left_sum / i as f64 + right_sum * right_sum / (n - i) as f64;
                if best.is_none_or(|(s, _, _)| score > s) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((score, f, threshold));
                }
            }
        }
        let (score, feature, threshold) = best?;
        if score <= parent_score + 1e-12 * parent_score.abs() {
            return None;
        }
        Some(BestSplit { feature, threshold })
    }
}

/// Seed for tree `index` of a forest seeded with `seed`.
pub fn tree_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

pub fn grow_tree(data: &Dataset, params: &RfParams, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = data.n_rows();
    let draws: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let order: Vec<usize> = (0..draws.len()).collect();
    let by_feature = (0..data.n_cols())
        .map(|f| {
            let mut sorted = order.clone();
            sorted.sort_by(|&a, &b| data.value(draws[a], f).total_cmp(&data.value(draws[b], f)));
            sorted
        })
        .collect();
    let mut grower = Grower {
        data,
        params,
        mtry: params.features_per_split(data.n_cols()),
        rng,
        nodes: Vec::new(),
        goes_left: vec![false; draws.len()],
        draws,
    };
    grower.grow(NodeRows { order, by_feature });
    Tree {
        nodes: grower.nodes,
    }
}

pub fn train(data: &Dataset, params: &RfParams, seed: u64) -> Result<Forest> {
    params.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::Invalid("cannot grow a forest on an empty dataset".into()));
    }
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| grow_tree(data, params, tree_seed(seed, t)))
        .collect();
    Ok(Forest {
        n_features: data.n_cols(),
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn constant_target_single_tree() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let d = Dataset::from_rows(names(2), &rows, vec![7.25; 20]).unwrap();
        let params = RfParams {
            trees: 1,
            bootstrap: false,
            ..Default::default()
        };
        let f = train(&d, &params, 1).unwrap();
        assert_eq!(f.trees[0].nodes.len(), 1);
        for r in &rows {
            assert_eq!(f.predict_row(r).unwrap(), 7.25);
        }
        assert_eq!(f.predict_row(&[-100.0, 3.0]).unwrap(), 7.25);
    }

    #[test]
    fn unbagged_tree_memorises_distinct_rows() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 13 % 30) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let d = Dataset::from_rows(names(1), &rows, y.clone()).unwrap();
        let params = RfParams {
            trees: 1,
            bootstrap: false,
            ..Default::default()
        };
        let f = train(&d, &params, 3).unwrap();
        for (r, t) in rows.iter().zip(&y) {
            assert_eq!(f.predict_row(r).unwrap(), *t);
        }
    }

    #[test]
    fn min_leaf_respected() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64).collect();
        let d = Dataset::from_rows(names(1), &rows, y).unwrap();
        let params = RfParams {
            trees: 1,
            bootstrap: false,
            min_leaf: 5,
            ..Default::default()
        };
        let f = train(&d, &params, 0).unwrap();
        for node in &f.trees[0].nodes {
            if let Node::Leaf { samples, .. } = node {
                assert!(*samples >= 5);
            }
        }
    }

    #[test]
    fn features_per_split_rounds_up() {
        let p = RfParams { feat_fraction: 0.75, ..Default::default() };
        assert_eq!(p.features_per_split(14), 11);
        let p = RfParams { feat_fraction: 0.5, ..Default::default() };
        assert_eq!(p.features_per_split(15), 8);
        assert_eq!(RfParams::default().features_per_split(14), 14);
        assert!(RfParams { feat_fraction: 0.0, ..Default::default() }.validate().is_err());
    }
}
