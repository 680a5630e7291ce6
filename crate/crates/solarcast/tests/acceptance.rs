//! End-to-end acceptance checks. Each test prints one pass line for its
//! criterion; failures panic with the measured value. All tolerances are
//! pinned here, not configurable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use solarcast::config::RunConfig;
use solarcast::data::Matrix;
use solarcast::eval::{self, benchmark_matrix, mae, r2, rmse, MetricScale, Methodology};
use solarcast::features::{add_calendar_features, make_supervised, split, SplitSpec};
use solarcast::models::forest::{fit_forest, predict_forest, ForestConfig};
use solarcast::models::gbm::{fit_gbm, predict_gbm, GbmConfig};
use solarcast::models::tree::best_split;
use solarcast::models::tweedie::{tweedie_deviance, tweedie_grad_hess, tweedie_loss};
use solarcast::models::zero_inflated::{
    fit_zero_inflated, predict_gate, predict_positive, predict_zero_inflated, GateKind,
    PositiveKind,
};
use solarcast::models::{FittedModel, ModelSpec};
use solarcast::synth::{generate_synthetic, SynthParams};
use solarcast::transform::{fit_lambda, profile_log_likelihood, yeo_johnson, yeo_johnson_inverse};

#[test]
fn criterion_1_metric_definitions_and_invariants() {
    // Identity predictions.
    let y = vec![0.5, 1.25, 7.0, 3.5];
    assert_eq!(r2(&y, &y).unwrap(), 1.0);
    assert_eq!(mae(&y, &y).unwrap(), 0.0);
    assert_eq!(rmse(&y, &y).unwrap(), 0.0);

    // Mean predictor scores R2 = 0.
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ybar = vec![mean; y.len()];
    assert!(r2(&y, &ybar).unwrap().abs() < 1e-12);

    // Hand-computed example: y = [0,0,3], yhat = [0,1,2].
    let y = vec![0.0, 0.0, 3.0];
    let yhat = vec![0.0, 1.0, 2.0];
    assert!((r2(&y, &yhat).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((mae(&y, &yhat).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((rmse(&y, &yhat).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);

    // RMSE >= MAE on 1000 random vectors.
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let n = rng.gen_range(2..40);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        assert!(rmse(&a, &b).unwrap() >= mae(&a, &b).unwrap() - 1e-12);
    }
    println!("criterion 1: PASS (metric definitions, hand example, rmse >= mae)");
}

#[test]
fn criterion_2_yeo_johnson_round_trip_and_lambda_recovery() {
    // Round trip below 1e-9 across branches and a wide input range.
    for &lambda in &[-2.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let mut x = -100.0;
        while x <= 100.0 {
            let z = yeo_johnson(x, lambda);
            if z.is_finite() {
                let back = yeo_johnson_inverse(z, lambda);
                assert!(
                    (back - x).abs() < 1e-9,
                    "round trip {x} at lambda {lambda}: got {back}"
                );
            }
            x += 0.25;
        }
    }

    // Lambda estimate agrees with a brute-force likelihood grid (step 1e-3)
    // within 2e-3 on 50 random columns.
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for case in 0..50 {
        let n = rng.gen_range(30..120);
        let shift = rng.gen_range(-2.0..2.0);
        let scale = rng.gen_range(0.5..3.0);
        let skew = rng.gen_range(0.0..2.0);
        let col: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.gen_range(-1.0..1.0);
                shift + scale * (u + skew * u * u)
            })
            .collect();
        let fitted = fit_lambda(&col).unwrap();
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut lam = -5.0;
        while lam <= 5.0 {
            let ll = profile_log_likelihood(&col, lam);
            if ll > best.0 {
                best = (ll, lam);
            }
            lam += 1e-3;
        }
        assert!(
            (fitted - best.1).abs() < 2e-3,
            "case {case}: fitted {fitted} vs grid {}",
            best.1
        );
    }

    // Near-Gaussian data wants lambda near 1.
    let normals: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        use rand_distr::{Distribution, StandardNormal};
        (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect()
    };
    let lam = fit_lambda(&normals).unwrap();
    assert!((0.85..=1.15).contains(&lam), "lambda on normals {lam}");
    println!("criterion 2: PASS (round trip < 1e-9, lambda vs grid < 2e-3, normals lambda {lam:.3})");
}

/// Simpson quadrature of the unit deviance 2 * int_mu^y (y - t) / t^p dt,
/// an oracle independent of the closed form.
fn deviance_quadrature(y: f64, mu: f64, p: f64) -> f64 {
    let n = 20_000;
    let (a, b) = (mu, y);
    let h = (b - a) / n as f64;
    let f = |t: f64| (y - t) / t.powf(p);
    let mut s = f(a) + f(b);
    for k in 1..n {
        let t = a + h * k as f64;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    2.0 * s * h / 3.0
}

#[test]
fn criterion_3_tweedie_deviance_gradient_hessian() {
    let p = 1.5;
    // Spot value: y = 0, mu = 1 gives d = 2/((2-p)) * mu^(2-p) = 4 at p = 1.5.
    assert!((tweedie_deviance(0.0, 1.0, p).unwrap() - 4.0).abs() < 1e-12);

    // Closed form vs quadrature on 100 positive pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..100 {
        let y = rng.gen_range(0.1..20.0);
        let mu = rng.gen_range(0.1..20.0);
        let d = tweedie_deviance(y, mu, p).unwrap();
        let q = deviance_quadrature(y, mu, p);
        assert!((d - q).abs() < 1e-8, "deviance {d} vs quadrature {q} at y={y} mu={mu}");
    }

    // Gradient and hessian of the score-space loss vs central differences.
    let eps = 1e-5;
    for _ in 0..1000 {
        let y = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.05..15.0) };
        let f = rng.gen_range(-2.0..2.5);
        let (g, h) = tweedie_grad_hess(y, f, p);
        let fd_g = (tweedie_loss(y, f + eps, p) - tweedie_loss(y, f - eps, p)) / (2.0 * eps);
        let (gp, _) = tweedie_grad_hess(y, f + eps, p);
        let (gm, _) = tweedie_grad_hess(y, f - eps, p);
        let fd_h = (gp - gm) / (2.0 * eps);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        assert!(rel(g, fd_g) < 1e-6, "grad {g} vs fd {fd_g} at y={y} f={f}");
        assert!(rel(h, fd_h) < 1e-6, "hess {h} vs fd {fd_h} at y={y} f={f}");
    }
    println!("criterion 3: PASS (deviance vs quadrature < 1e-8, grad/hess vs FD < 1e-6)");
}

/// Brute-force best split: try every boundary between distinct sorted
/// values of every feature, computing SSE directly.
fn brute_force_split(x: &Matrix, y: &[f64]) -> Option<(usize, f64, f64)> {
    let n = x.n_rows();
    let sse = |rows: &[usize]| -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let m = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64;
        rows.iter().map(|&i| (y[i] - m).powi(2)).sum()
    };
    let all: Vec<usize> = (0..n).collect();
    let parent = sse(&all);
    let mut best: Option<(usize, f64, f64)> = None;
    for feature in 0..x.n_cols() {
        let mut vals: Vec<f64> = (0..n).map(|i| x.get(i, feature)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let left: Vec<usize> = all.iter().copied().filter(|&i| x.get(i, feature) <= threshold).collect();
            let right: Vec<usize> = all.iter().copied().filter(|&i| x.get(i, feature) > threshold).collect();
            let gain = parent - sse(&left) - sse(&right);
            if gain > 1e-12 && best.map_or(true, |b| gain > b.2 + 1e-12) {
                best = Some((feature, threshold, gain));
            }
        }
    }
    best
}

#[test]
fn criterion_4_tree_and_ensemble_guarantees() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);

    // Exhaustive splitter agrees with brute force on 50 random instances.
    for case in 0..50 {
        let n = rng.gen_range(5..=50);
        let d = rng.gen_range(1..=4);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| (rng.gen_range(-5i32..5) as f64) / 2.0).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let x = Matrix::from_rows(&rows);
        let w = vec![1.0; n];
        let idx: Vec<usize> = (0..n).collect();
        let feats: Vec<usize> = (0..d).collect();
        let fast = best_split(&x, &y, &w, &idx, &feats, 1);
        let brute = brute_force_split(&x, &y);
        match (fast, brute) {
            (None, None) => {}
            (Some(f), Some(b)) => {
                assert!(
                    (f.gain - b.2).abs() < 1e-9,
                    "case {case}: gain {} vs brute {}",
                    f.gain,
                    b.2
                );
            }
            (f, b) => panic!("case {case}: split {f:?} vs brute {b:?}"),
        }
    }

    // Forest prediction is exactly the mean of its trees.
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 - r[1] + rng.gen_range(-0.2..0.2)).collect();
    let x = Matrix::from_rows(&rows);
    let forest = fit_forest(&x, &y, &ForestConfig { n_trees: 9, seed: 3, ..Default::default() });
    let pred = predict_forest(&forest, &x);
    for (i, row) in x.rows().enumerate() {
        let mean = forest.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
            / forest.trees.len() as f64;
        assert_eq!(pred[i], mean, "row {i}");
    }

    // First-order boosting training loss never increases.
    let gbm = fit_gbm(&x, &y, &GbmConfig { n_stages: 40, max_depth: 3, ..Default::default() }).unwrap();
    for w in gbm.train_loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "loss rose {} -> {}", w[0], w[1]);
    }

    // Learning rate 1 memorizes a noiseless tree-representable target.
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| if r[0] <= 0.0 { 1.0 } else { 5.0 } + if r[1] <= 0.5 { 0.0 } else { 2.0 })
        .collect();
    let x = Matrix::from_rows(&rows);
    let cfg = GbmConfig { n_stages: 50, learning_rate: 1.0, max_depth: 4, ..Default::default() };
    let m = fit_gbm(&x, &y, &cfg).unwrap();
    let pred = predict_gbm(&m, &x).unwrap();
    let mse = pred.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64;
    assert!(mse < 1e-10, "memorization mse {mse}");
    println!("criterion 4: PASS (split oracle x50, exact forest mean, monotone loss, memorization)");
}

#[test]
fn criterion_5_zero_inflated_expectation() {
    // Fit on a day/night-style fixture: a separable night indicator plus a
    // continuous driver of the positive part.
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let n = 600;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let night = i % 3 == 0;
        let driver = rng.gen_range(0.0..2.0);
        rows.push(vec![if night { 1.0 } else { 0.0 }, driver]);
        y.push(if night { 0.0 } else { 3.0 + 4.0 * driver + rng.gen_range(-0.5..0.5) });
    }
    let x = Matrix::from_rows(&rows);
    let m = fit_zero_inflated(
        &x,
        &y,
        GateKind::Logistic,
        PositiveKind::TweedieGbm(GbmConfig {
            n_stages: 30,
            loss: solarcast::models::gbm::Loss::Tweedie { power: 1.5 },
            ..Default::default()
        }),
    )
    .unwrap();

    // The combined expectation must match Monte-Carlo over the model's own
    // two-part mixture within 1% at one million draws per probe row.
    let probe = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.0, 1.5]]);
    let pi = predict_gate(&m, &probe).unwrap();
    let mu = predict_positive(&m, &probe).unwrap();
    let combined = predict_zero_inflated(&m, &probe).unwrap();
    for i in 0..probe.n_rows() {
        let mut sum = 0.0;
        let draws = 1_000_000u32;
        for _ in 0..draws {
            if !rng.gen_bool(pi[i]) {
                sum += mu[i];
            }
        }
        let mc = sum / draws as f64;
        let rel = (combined[i] - mc).abs() / mc.max(1e-9);
        assert!(rel < 0.01, "row {i}: E {} vs MC {mc}", combined[i]);
    }

    // Night rows drive the expectation under 0.1.
    let night_probe = Matrix::from_rows(&[vec![1.0, 0.5], vec![1.0, 1.5]]);
    for p in predict_zero_inflated(&m, &night_probe).unwrap() {
        assert!(p < 0.1, "night expectation {p}");
    }
    println!("criterion 5: PASS (expectation vs Monte-Carlo < 1%, night expectation < 0.1)");
}

#[test]
fn criterion_6_end_to_end_quality_on_synthetic_data() {
    let table = generate_synthetic(42, 730, &SynthParams::default());
    let lags = vec![24u32];
    let split_spec = SplitSpec::default();

    let mut lr_raw = Vec::new();
    let mut lr_pt = Vec::new();
    let mut pt_rf_24 = f64::NAN;
    let bc = RunConfig::default().benchmark_config();
    for &h in &[24u32, 48, 72] {
        let ds = add_calendar_features(&make_supervised(&table, h, &lags).unwrap());
        let (train, test) = split(&ds, &split_spec).unwrap();

        let lr = FittedModel::fit(&ModelSpec::Linear { l2: 0.0 }, &train.x, &train.y).unwrap();
        let yhat = lr.predict(&test.x).unwrap();
        lr_raw.push(r2(&test.y, &yhat).unwrap());

        let (pt_train, pt_test, _fp, _tp) = eval::fit_pt_split(&train, &test, &bc).unwrap();
        let lr = FittedModel::fit(&ModelSpec::Linear { l2: 0.0 }, &pt_train.x, &pt_train.y)
            .unwrap();
        lr_pt.push(r2(&pt_test.y, &lr.predict(&pt_test.x).unwrap()).unwrap());

        if h == 24 {
            let rf = FittedModel::fit(
                &ModelSpec::RandomForest(ForestConfig { seed: 7, ..Default::default() }),
                &pt_train.x,
                &pt_train.y,
            )
            .unwrap();
            pt_rf_24 = r2(&pt_test.y, &rf.predict(&pt_test.x).unwrap()).unwrap();
        }
    }

    assert!(pt_rf_24 >= 0.90, "power-transform random forest 24h R2 {pt_rf_24}");
    assert!(
        lr_pt[0] > lr_raw[0],
        "transformed LR {} not above raw LR {}",
        lr_pt[0],
        lr_raw[0]
    );
    for series in [&lr_raw, &lr_pt] {
        assert!(
            series[0] > series[1] && series[1] > series[2],
            "LR R2 not monotone over horizons: {series:?}"
        );
    }
    println!(
        "criterion 6: PASS (PT-RF 24h R2 {pt_rf_24:.4} >= 0.90; PT-LR {lr_pt:?} > raw LR {lr_raw:?}; both monotone)"
    );
}

#[test]
fn criterion_7_external_reference_ranges() {
    // Reference reproduction on real data is informative, not a CI gate: it
    // only runs when SOLARCAST_EXTERNAL_DATA points at a merged hourly CSV.
    let Ok(path) = std::env::var("SOLARCAST_EXTERNAL_DATA") else {
        println!("criterion 7: PASS (skipped: SOLARCAST_EXTERNAL_DATA not set)");
        return;
    };
    let table = solarcast::ingest::read_table_csv(std::path::Path::new(&path)).unwrap();
    let ds = add_calendar_features(&make_supervised(&table, 24, &[24]).unwrap());
    let (train, test) = split(&ds, &SplitSpec::default()).unwrap();

    let rf_spec = ModelSpec::RandomForest(ForestConfig { seed: 7, ..Default::default() });
    let rf = FittedModel::fit(&rf_spec, &train.x, &train.y).unwrap();
    let raw_r2 = r2(&test.y, &rf.predict(&test.x).unwrap()).unwrap();
    assert!(
        (raw_r2 - 0.8005).abs() <= 0.05,
        "raw RF 24h R2 {raw_r2} outside 0.8005 +/- 0.05"
    );

    let bc = RunConfig::default().benchmark_config();
    let (pt_train, pt_test, _fp, _tp) = eval::fit_pt_split(&train, &test, &bc).unwrap();
    let rf = FittedModel::fit(&rf_spec, &pt_train.x, &pt_train.y).unwrap();
    let pt_r2 = r2(&pt_test.y, &rf.predict(&pt_test.x).unwrap()).unwrap();
    assert!(
        (pt_r2 - 0.9574).abs() <= 0.03,
        "transformed RF 24h R2 {pt_r2} outside 0.9574 +/- 0.03"
    );
    println!("criterion 7: PASS (external RF 24h raw {raw_r2:.4}, transformed {pt_r2:.4})");
}

#[test]
fn criterion_8_benchmark_is_byte_identical_across_runs() {
    let table = generate_synthetic(5, 240, &SynthParams::default());
    let small_gbm = GbmConfig { n_stages: 20, ..Default::default() };
    let cfg = eval::BenchmarkConfig {
        horizons: vec![24, 48],
        lags: vec![24],
        split: SplitSpec::default(),
        seed: 77,
        regular_models: vec![
            eval::NamedModel { name: "linear_regression".into(), spec: ModelSpec::Linear { l2: 0.0 } },
            eval::NamedModel { name: "xgboost".into(), spec: ModelSpec::Xgboost(small_gbm) },
        ],
        zero_inflated_models: vec![eval::NamedModel {
            name: "zi_logistic_tweedie".into(),
            spec: ModelSpec::ZeroInflated {
                gate: GateKind::Logistic,
                positive: PositiveKind::TweedieGbm(GbmConfig {
                    n_stages: 15,
                    loss: solarcast::models::gbm::Loss::Tweedie { power: 1.5 },
                    ..Default::default()
                }),
            },
        }],
        power_transform_models: vec![eval::NamedModel {
            name: "random_forest".into(),
            spec: ModelSpec::RandomForest(ForestConfig { n_trees: 20, ..Default::default() }),
        }],
        dual_scale_reports: true,
        transform_features: true,
        transform_target: true,
    };
    let a = benchmark_matrix(&table, &cfg).unwrap();
    let b = benchmark_matrix(&table, &cfg).unwrap();
    let csv_a = eval::reports_to_csv(&a.cells);
    let csv_b = eval::reports_to_csv(&b.cells);
    assert!(!csv_a.is_empty() && csv_a.lines().count() > 1);
    assert_eq!(csv_a.as_bytes(), csv_b.as_bytes());
    assert!(a.cells.iter().all(|c| c.error.is_none()), "cells failed: {:?}",
        a.cells.iter().filter(|c| c.error.is_some()).collect::<Vec<_>>());
    // Dual-scale power-transform cells report both scales.
    let pt = a
        .cells
        .iter()
        .find(|c| c.methodology == Methodology::PowerTransform)
        .unwrap();
    assert!(pt.reports.iter().any(|r| r.scale == MetricScale::Transformed));
    assert!(pt.reports.iter().any(|r| r.scale == MetricScale::InverseTransformed));
    println!("criterion 8: PASS (two benchmark runs byte-identical, {} report rows)", csv_a.lines().count() - 1);
}

#[test]
fn criterion_9_persistence_round_trip_bits() {
    let table = generate_synthetic(8, 200, &SynthParams::default());
    let ds = add_calendar_features(&make_supervised(&table, 24, &[24]).unwrap());
    let (train, _test) = split(&ds, &SplitSpec::default()).unwrap();

    let small_gbm = GbmConfig { n_stages: 15, seed: 11, ..Default::default() };
    let small_forest = ForestConfig { n_trees: 15, seed: 12, ..Default::default() };
    let specs = [
        ModelSpec::Linear { l2: 0.1 },
        ModelSpec::GradientBoosting(small_gbm),
        ModelSpec::Xgboost(small_gbm),
        ModelSpec::RandomForest(small_forest),
        ModelSpec::ForestPlusXgboost { forest: small_forest, boosted: small_gbm },
        ModelSpec::ZeroInflated {
            gate: GateKind::Logistic,
            positive: PositiveKind::TweedieGbm(GbmConfig {
                loss: solarcast::models::gbm::Loss::Tweedie { power: 1.5 },
                ..small_gbm
            }),
        },
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let d = train.x.n_cols();
    let probe = Matrix::from_rows(
        &(0..1000)
            .map(|_| (0..d).map(|_| rng.gen_range(-50.0..150.0)).collect())
            .collect::<Vec<Vec<f64>>>(),
    );

    let dir = tempfile::tempdir().unwrap();
    for spec in &specs {
        let model = FittedModel::fit(spec, &train.x, &train.y).unwrap();
        let artifact = solarcast::persist::ModelArtifact {
            format_version: solarcast::persist::FORMAT_VERSION,
            model,
            feature_names: ds.feature_names.clone(),
            feature_transform: None,
            target_transform: None,
            horizon_hours: 24,
            methodology: "regular".into(),
            meta: solarcast::persist::ArtifactMeta {
                seed: 11,
                config_digest: RunConfig::default().digest(),
                train_end: train.timestamps.last().copied(),
            },
        };
        let path = dir.path().join(format!("{}.json", spec.default_name()));
        solarcast::persist::save_artifact(&artifact, &path).unwrap();
        let loaded = solarcast::persist::load_artifact(&path).unwrap();

        let before = artifact.model.predict(&probe).unwrap();
        let after = loaded.model.predict(&probe).unwrap();
        for (i, (a, b)) in before.iter().zip(&after).enumerate() {
            assert_eq!(a.to_bits(), b.to_bits(), "{}: row {i}: {a} vs {b}", spec.default_name());
        }
    }
    println!(
        "criterion 9: PASS ({} model kinds, 1000 predictions bit-identical after save/load)",
        specs.len()
    );
}
