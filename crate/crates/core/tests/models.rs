mod common;

use gazelab::models::mlp::{self, MomentumSgd, Network};
use gazelab::models::{
    forest, knn, linreg, train, Dataset, Forest, KnnParams, LinRegParams, MlpModel, MlpParams,
    ModelConfig, Parameters, Predictor, RfParams, Selection, TrainedModel,
};
use gazelab::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn no_selection(ridge: f64) -> LinRegParams {
    LinRegParams {
        selection: Selection::None,
        ridge,
    }
}

fn mse(model: &dyn Predictor, data: &Dataset) -> f64 {
    (0..data.n_rows())
        .map(|i| (model.predict_row(data.row(i)).unwrap() - data.y()[i]).powi(2))
        .sum::<f64>()
        / data.n_rows() as f64
}

/// Least squares with intercept through nalgebra's SVD.
fn lstsq(data: &Dataset) -> Vec<f64> {
    let (n, p) = (data.n_rows(), data.n_cols());
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { data.value(i, j - 1) });
    let y = DVector::from_column_slice(data.y());
    let beta = x.svd(true, true).solve(&y, 1e-14).unwrap();
    beta.iter().copied().collect()
}

#[test]
fn linreg_matches_normal_equations() {
    let data = common::synthetic(300, 6, 0.5, 11, |r| {
        3.0 + 2.0 * r[0] - 1.5 * r[1] + 0.25 * r[2] + 4.0 * r[5]
    });
    let m = linreg::train(&data, &no_selection(0.0)).unwrap();
    let (coef, intercept) = m.raw_coefficients();
    let want = lstsq(&data);
    assert!(common::close(intercept, want[0], 1e-8), "{intercept} vs {}", want[0]);
    for j in 0..6 {
        assert!(common::close(coef[j], want[j + 1], 1e-8), "coef {j}: {} vs {}", coef[j], want[j + 1]);
    }
}

#[test]
fn greedy_drops_irrelevant_feature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.gen(), rng.gen()]).collect();
    let y = rows.iter().map(|r| r[0]).collect();
    let data = Dataset::from_rows(common::names(2), &rows, y).unwrap();
    for selection in [Selection::Greedy, Selection::M5] {
        let m = linreg::train(&data, &LinRegParams { selection, ridge: 0.0 }).unwrap();
        assert_eq!(m.selected, [0], "{selection}");
        let (coef, b) = m.raw_coefficients();
        assert!((coef[0] - 1.0).abs() < 1e-9 && b.abs() < 1e-9);
    }
    let full = linreg::train(&data, &no_selection(0.0)).unwrap();
    assert_eq!(full.selected, [0, 1]);
}

#[test]
fn underdetermined_fit_needs_ridge() {
    let data = common::synthetic(5, 14, 0.1, 1, |r| r[0]);
    let err = linreg::train(&data, &no_selection(0.0)).unwrap_err();
    assert!(matches!(err, Error::Singular(_)));
    assert_eq!(err.exit_code(), 3);
    assert!(linreg::train(&data, &no_selection(1e-3)).is_ok());
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net = Network::init(2, 1, &mut rng);
    assert_eq!(net.params.len(), 5);
    let (x, t) = ([0.3, 0.8], 0.6);
    let (_, grad) = net.loss_and_gradient(&x, t);
    let h = 1e-6;
    for k in 0..net.params.len() {
        let w = net.params[k];
        net.params[k] = w + h;
        let up = net.loss(&x, t);
        net.params[k] = w - h;
        let down = net.loss(&x, t);
        net.params[k] = w;
        let numeric = (up - down) / (2.0 * h);
        let rel = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1e-12);
        assert!(rel < 1e-4, "param {k}: analytic {} numeric {numeric}", grad[k]);
    }
}

#[test]
fn mlp_learns_xor() {
    let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let data = Dataset::from_rows(common::names(2), &rows, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let params = MlpParams {
        lr: 0.1,
        momentum: 0.9,
        epochs: 5000,
        hidden: Some(4),
    };
    let m = mlp::train(&data, &params, 1).unwrap();
    assert!(mse(&m, &data) < 0.01, "xor mse {}", mse(&m, &data));
}

#[test]
fn zero_momentum_is_plain_sgd() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = Network::init(3, 2, &mut rng);
    let samples = [([0.1, 0.5, 0.9], 0.2), ([0.7, 0.2, 0.4], 0.9), ([0.3, 0.3, 0.3], 0.5)];
    let lr = 0.05;
    let mut a = net.clone();
    let mut opt = MomentumSgd::new(a.params.len(), lr, 0.0);
    let mut b = net.clone();
    for (x, t) in samples {
        let (_, g) = a.loss_and_gradient(&x, t);
        opt.step(&mut a.params, &g);
        let (_, g) = b.loss_and_gradient(&x, t);
        for (w, gi) in b.params.iter_mut().zip(g) {
            *w -= lr * gi;
        }
    }
    assert_eq!(a, b);
}

#[test]
fn momentum_recurrence() {
    let (lr, m) = (0.1, 0.5);
    let mut opt = MomentumSgd::new(1, lr, m);
    let mut w = [0.0];
    let (mut v_ref, mut w_ref) = (0.0, 0.0);
    for g in [1.0, -2.0, 0.5, 3.0] {
        opt.step(&mut w, &[g]);
        v_ref = m * v_ref - lr * g;
        w_ref += v_ref;
        assert_eq!(w[0], w_ref);
    }
}

#[test]
fn zero_learning_rate_keeps_initial_weights() {
    let data = common::synthetic(30, 4, 0.1, 2, |r| r[0] + r[1]);
    let params = MlpParams {
        lr: 0.0,
        epochs: 20,
        ..Default::default()
    };
    let trained = mlp::train(&data, &params, 17).unwrap();
    assert_eq!(trained, MlpModel::initial(&data, &params, 17));
}

#[test]
fn forest_beats_single_tree_on_held_out_rows() {
    let f = |r: &[f64]| 10.0 * r[1] + 3.0 * (6.0 * r[0]).sin() + r[2];
    let train_data = common::synthetic(400, 5, 1.0, 21, f);
    let test_data = common::synthetic(400, 5, 1.0, 22, f);
    let one = forest::train(&train_data, &RfParams { trees: 1, ..Default::default() }, 4).unwrap();
    let many = forest::train(&train_data, &RfParams::default(), 4).unwrap();
    assert!(mse(&many, &test_data) < mse(&one, &test_data));
}

#[test]
fn forest_splits_mostly_on_the_dominant_feature() {
    let data = common::synthetic(300, 4, 0.05, 8, |r| 20.0 * r[1] + 0.5 * r[3]);
    let params = RfParams {
        trees: 20,
        feat_fraction: 0.5,
        ..Default::default()
    };
    let m: Forest = forest::train(&data, &params, 1).unwrap();
    let counts = m.split_counts();
    let top = (0..4).max_by_key(|&j| counts[j]).unwrap();
    assert_eq!(top, 1, "{counts:?}");
    for i in 0..10 {
        let row = data.row(i);
        let per_tree = m.tree_predictions(row);
        let mean = per_tree.iter().sum::<f64>() / per_tree.len() as f64;
        assert_eq!(m.predict_row(row).unwrap(), mean);
    }
}

#[test]
fn forest_without_bootstrap_fits_training_rows() {
    let data = common::synthetic(60, 3, 1.0, 4, |r| r[0] * 5.0);
    let params = RfParams {
        trees: 1,
        bootstrap: false,
        ..Default::default()
    };
    let m = forest::train(&data, &params, 0).unwrap();
    assert!(mse(&m, &data) < 1e-20);
}

#[test]
fn knn_ignores_power_of_two_rescaling() {
    let data = common::synthetic(80, 3, 0.2, 6, |r| r[0] - r[2]);
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|i| data.row(i).iter().zip([4.0, 0.125, 1024.0]).map(|(v, s)| v * s).collect())
        .collect();
    let scaled = Dataset::from_rows(common::names(3), &rows, data.y().to_vec()).unwrap();
    let params = KnnParams { k: 5, ..Default::default() };
    let a = knn::train(&data, &params).unwrap();
    let b = knn::train(&scaled, &params).unwrap();
    for i in 0..80 {
        assert_eq!(a.predict_row(data.row(i)).unwrap(), b.predict_row(&rows[i]).unwrap());
    }
}

#[test]
fn knn_ties_go_to_lower_index() {
    let rows = vec![vec![1.0], vec![0.0], vec![2.0], vec![0.0]];
    let data = Dataset::from_rows(common::names(1), &rows, vec![10.0, 20.0, 30.0, 40.0]).unwrap();
    let m = knn::train(&data, &KnnParams { k: 1, ..Default::default() }).unwrap();
    assert_eq!(m.neighbours(&[0.0]), [1]);
    assert_eq!(m.predict_row(&[0.0]).unwrap(), 20.0);
    assert!(knn::train(&data, &KnnParams { k: 5, ..Default::default() }).is_err());
}

fn all_configs(seed: u64) -> Vec<ModelConfig> {
    let mut mlp = ModelConfig::mlp(0.005, 0.2, seed);
    if let gazelab::models::Family::Mlp(p) = &mut mlp.family {
        p.epochs = 50;
    }
    vec![
        ModelConfig::linreg(Selection::M5, seed),
        mlp,
        ModelConfig::rf(10, 0.75, seed),
        ModelConfig::knn(5, seed),
    ]
}

#[test]
fn saved_models_predict_identically() {
    let data = common::synthetic(120, 14, 5.0, 31, |r| 200.0 + 30.0 * r[0] + 10.0 * r[4]);
    let dir = tempfile::tempdir().unwrap();
    for cfg in all_configs(3) {
        let m = train(&data, &cfg).unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = TrainedModel::load(&path).unwrap();
        assert_eq!(back, m);
        let (p, q) = (m.predict(&data).unwrap(), back.predict(&data).unwrap());
        assert!(p.iter().zip(&q).all(|(a, b)| a.to_bits() == b.to_bits()), "{cfg}");
    }
}

#[test]
fn model_documents_are_versioned() {
    let data = common::synthetic(20, 2, 0.1, 1, |r| r[0]);
    let m = train(&data, &ModelConfig::knn(3, 0)).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
    doc["format_version"] = 2.into();
    let err = TrainedModel::from_json(&doc.to_string()).unwrap_err();
    assert!(matches!(err, Error::Version { found: 2, expected: 1 }));
}

#[test]
fn schema_mismatch_is_rejected() {
    let data = common::synthetic(20, 3, 0.1, 1, |r| r[0]);
    let m = train(&data, &ModelConfig::linreg(Selection::None, 0)).unwrap();
    let renamed = Dataset::from_rows(
        vec!["f0".into(), "f2".into(), "f1".into()],
        &(0..20).map(|i| data.row(i).to_vec()).collect::<Vec<_>>(),
        data.y().to_vec(),
    )
    .unwrap();
    assert!(matches!(m.predict(&renamed), Err(Error::SchemaMismatch { .. })));
    assert!(m.predict_row(&[0.0, 1.0]).is_err());
    assert!(m.predict_row(&[0.0, f64::NAN, 1.0]).is_err());
}

#[test]
fn training_is_deterministic() {
    let data = common::synthetic(100, 5, 1.0, 13, |r| r[0] * 4.0 + r[3]);
    for cfg in all_configs(42) {
        let a = train(&data, &cfg).unwrap().to_json().unwrap();
        let b = train(&data, &cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b, "{cfg}");
    }
    let a = train(&data, &ModelConfig::rf(5, 1.0, 1)).unwrap();
    let b = train(&data, &ModelConfig::rf(5, 1.0, 2)).unwrap();
    assert_ne!(a.parameters, b.parameters);
    assert!(matches!(a.parameters, Parameters::Rf(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forest_predictions_stay_within_target_range(seed in 0u64..1000, n in 2usize..40) {
        let data = common::synthetic(n, 3, 1.0, seed, |r| r[0] * 10.0);
        let m = forest::train(&data, &RfParams { trees: 5, ..Default::default() }, seed).unwrap();
        let lo = data.y().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = data.y().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for i in 0..n {
            let p = m.predict_row(data.row(i)).unwrap();
            prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }
    }

    #[test]
    fn knn_with_all_rows_predicts_the_mean(seed in 0u64..1000, n in 1usize..30) {
        let data = common::synthetic(n, 2, 1.0, seed, |r| r[1]);
        let m = knn::train(&data, &KnnParams { k: n, ..Default::default() }).unwrap();
        let mean = data.y().iter().sum::<f64>() / n as f64;
        prop_assert!((m.predict_row(data.row(0)).unwrap() - mean).abs() < 1e-9);
    }
}
