//! Fits against synthetic data drawn from known power-law generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scour_core::model::{
    fit, rmse_objective, CoefficientBounds, FeatureId, ModelSpec, PowerLawModel,
};
use scour_core::{metrics, DimensionlessRecord, Scale, SwarmConfig};

/// Feature box of the laboratory data (min/max of each dimensionless input).
const LAB_RANGES: [(f64, f64); 5] = [
    (1.1, 5.5),
    (0.067, 1.498),
    (0.0477, 19.16),
    (0.00012, 0.107),
    (0.4148, 5.38),
];

fn lab_sample(rng: &mut ChaCha8Rng, truth: &PowerLawModel, n: usize) -> Vec<DimensionlessRecord> {
    (0..n)
        .map(|_| {
            let v: Vec<f64> = LAB_RANGES
                .iter()
                .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                .collect();
            let mut r = DimensionlessRecord {
                sigma: v[0],
                froude: v[1],
                d_over_y: v[2],
                d50_over_y: v[3],
                fifth_feature: v[4],
                s_over_y: 0.0,
                scale: Scale::Laboratory,
            };
            r.s_over_y = truth.predict(&r).unwrap();
            r
        })
        .collect()
}

fn l1_truth() -> PowerLawModel {
    PowerLawModel::new(
        ModelSpec::builtin("L1").unwrap(),
        1.282,
        vec![-0.397, 0.679, 0.610, -0.142, -0.476],
    )
    .unwrap()
}

#[test]
fn recovers_l1_generator() {
    let truth = l1_truth();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let train = lab_sample(&mut rng, &truth, 300);
    let held_out = lab_sample(&mut rng, &truth, 100);
    let out = fit(
        truth.spec(),
        &train,
        &SwarmConfig::default().with_seed(1),
        &CoefficientBounds::default(),
    )
    .unwrap();
    assert!(
        out.optimization.best_value < 1e-3,
        "rmse {}",
        out.optimization.best_value
    );
    for r in &held_out {
        let (p, t) = (out.model.predict(r).unwrap(), r.s_over_y);
        assert!(((p - t) / t).abs() < 0.01, "pred {p} truth {t}");
    }
}

#[test]
fn single_feature_exponent_sign() {
    for (k, seed) in [(0.8, 1u64), (-0.6, 2)] {
        let spec = ModelSpec::new("dy-only", Scale::Laboratory, vec![FeatureId::DOverY]).unwrap();
        let truth = PowerLawModel::new(spec.clone(), 0.9, vec![k]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = lab_sample(&mut rng, &truth, 100);
        let cfg = SwarmConfig {
            iteration_count: 150,
            ..SwarmConfig::default().with_seed(seed)
        };
        let out = fit(&spec, &data, &cfg, &CoefficientBounds::default()).unwrap();
        assert_eq!(out.model.exponents()[0].signum(), k.signum());
    }
}

#[test]
fn fit_is_deterministic() {
    let truth = l1_truth();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = lab_sample(&mut rng, &truth, 80);
    let spec = ModelSpec::builtin("L6").unwrap();
    let cfg = SwarmConfig {
        iteration_count: 60,
        ..SwarmConfig::default().with_seed(77)
    };
    let a = fit(&spec, &data, &cfg, &CoefficientBounds::default()).unwrap();
    let b = fit(&spec, &data, &cfg, &CoefficientBounds::default()).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let c = pool.install(|| fit(&spec, &data, &cfg, &CoefficientBounds::default()).unwrap());
    assert_eq!(a, c);
}

#[test]
fn objective_agrees_with_metric_rmse() {
    let truth = l1_truth();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = lab_sample(&mut rng, &truth, 50);
    let spec = truth.spec().clone();
    let obj = rmse_objective(&spec, &data).unwrap();
    for _ in 0..200 {
        let coeffs: Vec<f64> = std::iter::once(rng.gen_range(0.01..5.0))
            .chain((0..5).map(|_| rng.gen_range(-1.5..1.5)))
            .collect();
        let m = PowerLawModel::from_coefficients(spec.clone(), &coeffs).unwrap();
        let preds: Vec<f64> = data.iter().map(|r| m.predict(r).unwrap()).collect();
        let targets: Vec<f64> = data.iter().map(|r| r.s_over_y).collect();
        let want = metrics::rmse(&targets, &preds);
        assert!((obj.evaluate(&coeffs) - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn log_prediction_is_affine_in_exponents() {
    // Central finite differences of ln(predict) w.r.t. each exponent must equal ln(feature),
    // and the second difference must vanish.
    let truth = l1_truth();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let rec = lab_sample(&mut rng, &truth, 1)[0];
    let base = truth.coefficients();
    let h = 1e-4;
    for (i, f) in truth.spec().features.iter().enumerate() {
        let eval = |delta: f64| {
            let mut c = base.clone();
            c[i + 1] += delta;
            PowerLawModel::from_coefficients(truth.spec().clone(), &c)
                .unwrap()
                .predict(&rec)
                .unwrap()
                .ln()
        };
        let slope = (eval(h) - eval(-h)) / (2.0 * h);
        let want = rec.feature(*f).unwrap().ln();
        assert!((slope - want).abs() < 1e-7, "{f}: {slope} vs {want}");
        let curvature = (eval(h) - 2.0 * eval(0.0) + eval(-h)) / (h * h);
        assert!(curvature.abs() < 1e-3, "{f}: curvature {curvature}");
    }
}

#[test]
fn log_linear_regression_oracle_agrees_with_swarm() {
    // Ordinary least squares on ln(S/y) gives the exact generator for noise-free data;
    // the swarm fit must land on the same coefficients.
    let spec = ModelSpec::new(
        "two",
        Scale::Laboratory,
        vec![FeatureId::Froude, FeatureId::DOverY],
    )
    .unwrap();
    let truth = PowerLawModel::new(spec.clone(), 1.7, vec![0.4, 0.6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let data = lab_sample(&mut rng, &truth, 60);

    // Normal equations for [ln a, k1, k2].
    let rows: Vec<[f64; 3]> = data
        .iter()
        .map(|r| [1.0, r.froude.ln(), r.d_over_y.ln()])
        .collect();
    let ys: Vec<f64> = data.iter().map(|r| r.s_over_y.ln()).collect();
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (row, y) in rows.iter().zip(&ys) {
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let ols = solve3(ata, aty);

    let out = fit(
        &spec,
        &data,
        &SwarmConfig::default().with_seed(4),
        &CoefficientBounds::default(),
    )
    .unwrap();
    assert!((out.model.constant() - ols[0].exp()).abs() < 1e-3);
    assert!((out.model.exponents()[0] - ols[1]).abs() < 1e-3);
    assert!((out.model.exponents()[1] - ols[2]).abs() < 1e-3);
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (b[i] - (i + 1..3).map(|k| a[i][k] * x[k]).sum::<f64>()) / a[i][i];
    }
    x
}
