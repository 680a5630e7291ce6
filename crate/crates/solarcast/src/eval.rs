//! Metrics, model evaluation, cross-validation, grid search, the
//! three-methodology benchmark matrix, and plot-data emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{SupervisedDataset, TargetScale, TimeTable, Timestamp};
use crate::error::{Result, ToolError};
use crate::features::{add_calendar_features, make_cv_folds, make_supervised, split, FoldPlan, SplitSpec};
use crate::models::{FittedModel, ModelSpec};
use crate::transform::{self, ColumnTransform, PowerTransformParams};

/// Coefficient of determination 1 - SSE/SST.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(ToolError::NonFinite("R2 undefined for constant targets".into()));
    }
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    Ok((y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64).sqrt())
}

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(ToolError::Config(format!(
            "metric inputs must be equal nonzero lengths ({} vs {})",
            y.len(),
            yhat.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Methodology {
    Regular,
    ZeroInflated,
    PowerTransform,
}

impl Methodology {
    pub fn as_str(&self) -> &'static str {
        match self {
            Methodology::Regular => "regular",
            Methodology::ZeroInflated => "zero_inflated",
            Methodology::PowerTransform => "power_transform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricScale {
    Raw,
    Transformed,
    InverseTransformed,
}

impl MetricScale {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricScale::Raw => "raw",
            MetricScale::Transformed => "transformed",
            MetricScale::InverseTransformed => "inverse_transformed",
        }
    }
}

/// One row of the benchmark tables: model x horizon x {R2, MAE, RMSE}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub methodology: Methodology,
    pub model: String,
    pub hours_out: u32,
    pub scale: MetricScale,
    pub r2: f64,
    pub mae: f64,
    pub rmse: f64,
}

impl EvalReport {
    pub fn new(
        methodology: Methodology,
        model: &str,
        hours_out: u32,
        scale: MetricScale,
        y: &[f64],
        yhat: &[f64],
    ) -> Result<EvalReport> {
        let report = EvalReport {
            methodology,
            model: model.to_string(),
            hours_out,
            scale,
            r2: r2(y, yhat)?,
            mae: mae(y, yhat)?,
            rmse: rmse(y, yhat)?,
        };
        // Quadratic mean dominates the arithmetic mean of |e|.
        debug_assert!(report.rmse >= report.mae - 1e-12);
        Ok(report)
    }
}

/// Evaluates a fitted model on a test set.
///
/// With a target transform present, the test set is on the transformed
/// scale and two reports come back: transformed-scale metrics plus
/// raw-scale metrics after inverse-transforming predictions and targets.
pub fn evaluate(
    model: &FittedModel,
    methodology: Methodology,
    name: &str,
    test: &SupervisedDataset,
    target_transform: Option<&ColumnTransform>,
) -> Result<Vec<EvalReport>> {
    let yhat = model.predict(&test.x)?;
    match target_transform {
        None => Ok(vec![EvalReport::new(
            methodology,
            name,
            test.horizon_hours,
            MetricScale::Raw,
            &test.y,
            &yhat,
        )?]),
        Some(tt) => {
            let transformed = EvalReport::new(
                methodology,
                name,
                test.horizon_hours,
                MetricScale::Transformed,
                &test.y,
                &yhat,
            )?;
            let inv = |v: &[f64]| -> Vec<f64> { v.iter().map(|&z| tt.invert(z)).collect() };
            let y_raw = inv(&test.y);
            let yhat_raw = inv(&yhat);
            if y_raw.iter().chain(&yhat_raw).any(|v| !v.is_finite()) {
                return Err(ToolError::NonFinite(
                    "inverse transform left the target domain during evaluation".into(),
                ));
            }
            let raw = EvalReport::new(
                methodology,
                name,
                test.horizon_hours,
                MetricScale::InverseTransformed,
                &y_raw,
                &yhat_raw,
            )?;
            Ok(vec![transformed, raw])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    R2,
    NegMae,
    NegRmse,
}

impl Scoring {
    fn score(&self, y: &[f64], yhat: &[f64]) -> Result<f64> {
        match self {
            Scoring::R2 => r2(y, yhat),
            Scoring::NegMae => Ok(-mae(y, yhat)?),
            Scoring::NegRmse => Ok(-rmse(y, yhat)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

/// Deterministic per-fold fit + score; higher is better for every scoring.
pub fn cross_validate(
    spec: &ModelSpec,
    ds: &SupervisedDataset,
    plan: &FoldPlan,
    scoring: Scoring,
) -> Result<CvSummary> {
    let folds = make_cv_folds(ds.len(), plan)?;
    let mut fold_scores = Vec::with_capacity(folds.len());
    for fold in &folds {
        let fit_ds = ds.select(&fold.fit);
        let val_ds = ds.select(&fold.validate);
        let model = FittedModel::fit(spec, &fit_ds.x, &fit_ds.y)?;
        let yhat = model.predict(&val_ds.x)?;
        fold_scores.push(scoring.score(&val_ds.y, &yhat)?);
    }
    let n = fold_scores.len() as f64;
    let mean = fold_scores.iter().sum::<f64>() / n;
    let sd = (fold_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(CvSummary { fold_scores, mean, sd })
}

/// Hyperparameter grid: per-name discrete value lists, evaluated
/// exhaustively over their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub params: Vec<(String, Vec<f64>)>,
    pub scoring: Scoring,
    pub folds: FoldPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScoreRow {
    pub assignment: Vec<(String, f64)>,
    pub fold: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best_spec: ModelSpec,
    pub best_assignment: Vec<(String, f64)>,
    pub best_mean_score: f64,
    pub table: Vec<GridScoreRow>,
}

/// Exhaustive grid search by cross-validation; ties break to the first
/// point in grid order.
pub fn grid_search(
    base: &ModelSpec,
    grid: &GridSpec,
    train: &SupervisedDataset,
) -> Result<GridSearchResult> {
    if grid.params.is_empty() || grid.params.iter().any(|(_, vs)| vs.is_empty()) {
        return Err(ToolError::Config("grid must be non-empty".into()));
    }
    let mut best: Option<(f64, ModelSpec, Vec<(String, f64)>)> = None;
    let mut table = Vec::new();
    let mut counters = vec![0usize; grid.params.len()];
    loop {
        let assignment: Vec<(String, f64)> = grid
            .params
            .iter()
            .zip(&counters)
            .map(|((name, vals), &i)| (name.clone(), vals[i]))
            .collect();
        let mut spec = *base;
        for (name, value) in &assignment {
            spec = spec.with_param(name, *value)?;
        }
        let summary = cross_validate(&spec, train, &grid.folds, grid.scoring)?;
        for (fold, &score) in summary.fold_scores.iter().enumerate() {
            table.push(GridScoreRow { assignment: assignment.clone(), fold, score });
        }
        if best.as_ref().map_or(true, |(s, _, _)| summary.mean > *s) {
            best = Some((summary.mean, spec, assignment));
        }
        // Odometer over the grid.
        let mut pos = grid.params.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            counters[pos] += 1;
            if counters[pos] < grid.params[pos].1.len() {
                break;
            }
            counters[pos] = 0;
            if pos == 0 {
                let (best_mean_score, best_spec, best_assignment) = best.unwrap();
                return Ok(GridSearchResult {
                    best_spec,
                    best_assignment,
                    best_mean_score,
                    table,
                });
            }
        }
    }
}

/// One model entry of a benchmark config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedModel {
    pub name: String,
    pub spec: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub horizons: Vec<u32>,
    pub lags: Vec<u32>,
    pub split: SplitSpec,
    pub seed: u64,
    pub regular_models: Vec<NamedModel>,
    pub zero_inflated_models: Vec<NamedModel>,
    pub power_transform_models: Vec<NamedModel>,
    /// Emit the raw-scale companion report for power-transform cells in
    /// addition to the transformed-scale row.
    pub dual_scale_reports: bool,
    pub transform_features: bool,
    pub transform_target: bool,
}

/// One benchmark cell: either its report rows or an error annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub methodology: Methodology,
    pub model: String,
    pub hours_out: u32,
    pub reports: Vec<EvalReport>,
    pub error: Option<String>,
}

/// Per-cell seed: a stated hash of (master seed, methodology, model,
/// horizon), so any cell reproduces independently of execution order.
pub fn cell_seed(master: u64, methodology: Methodology, model: &str, hours_out: u32) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(methodology.as_str().as_bytes());
    hasher.update(model.as_bytes());
    hasher.update(hours_out.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Benchmark side output: the aligned actual/predicted test series for one
/// designated cell, feeding the prediction plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSeries {
    pub methodology: Methodology,
    pub model: String,
    pub hours_out: u32,
    pub timestamps: Vec<Timestamp>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    pub cells: Vec<CellResult>,
    /// Raw and (when fitted) transformed target values of the first
    /// power-transform horizon, for the histogram plot.
    pub target_histogram: Option<(Vec<f64>, Vec<f64>)>,
    pub prediction_series: Option<PredictionSeries>,
}

/// Runs the full matrix: methodologies x models x horizons. Cell failures
/// are recorded, not fatal; results are sorted by (methodology, model,
/// horizon) so assembly order cannot leak into the output.
pub fn benchmark_matrix(table: &TimeTable, cfg: &BenchmarkConfig) -> Result<BenchmarkOutput> {
    if cfg.horizons.is_empty() {
        return Err(ToolError::Config("benchmark needs at least one horizon".into()));
    }
    let mut cells: Vec<CellResult> = Vec::new();
    let mut target_histogram = None;
    let mut prediction_series: Option<PredictionSeries> = None;

    for &h in &cfg.horizons {
        let ds = add_calendar_features(&make_supervised(table, h, &cfg.lags)?);
        let (train, test) = split(&ds, &cfg.split)?;

        // Raw-target methodologies share the untransformed split.
        for (methodology, models) in [
            (Methodology::Regular, &cfg.regular_models),
            (Methodology::ZeroInflated, &cfg.zero_inflated_models),
        ] {
            for nm in models {
                let seed = cell_seed(cfg.seed, methodology, &nm.name, h);
                let spec = nm.spec.with_seed(seed);
                let outcome = FittedModel::fit(&spec, &train.x, &train.y)
                    .and_then(|m| evaluate(&m, methodology, &nm.name, &test, None));
                cells.push(to_cell(methodology, &nm.name, h, outcome));
            }
        }

        // Power-transform methodology: fit on train only, reuse for test.
        if !cfg.power_transform_models.is_empty() {
            match fit_pt_split(&train, &test, cfg) {
                Ok((pt_train, pt_test, _fp, tp)) => {
                    if target_histogram.is_none() {
                        target_histogram = Some((train.y.clone(), pt_train.y.clone()));
                    }
                    for nm in &cfg.power_transform_models {
                        let seed = cell_seed(cfg.seed, Methodology::PowerTransform, &nm.name, h);
                        let spec = nm.spec.with_seed(seed);
                        let outcome = FittedModel::fit(&spec, &pt_train.x, &pt_train.y).and_then(|m| {
                            if prediction_series.is_none() && nm.name.contains("random_forest") {
                                let yhat = m.predict(&pt_test.x)?;
                                prediction_series = Some(PredictionSeries {
                                    methodology: Methodology::PowerTransform,
                                    model: nm.name.clone(),
                                    hours_out: h,
                                    timestamps: pt_test.timestamps.clone(),
                                    actual: pt_test.y.clone(),
                                    predicted: yhat,
                                });
                            }
                            let mut reports =
                                evaluate(&m, Methodology::PowerTransform, &nm.name, &pt_test, tp.as_ref())?;
                            if !cfg.dual_scale_reports {
                                reports.retain(|r| r.scale != MetricScale::InverseTransformed);
                            }
                            Ok(reports)
                        });
                        cells.push(to_cell(Methodology::PowerTransform, &nm.name, h, outcome));
                    }
                }
                Err(e) => {
                    for nm in &cfg.power_transform_models {
                        cells.push(to_cell(
                            Methodology::PowerTransform,
                            &nm.name,
                            h,
                            Err(ToolError::Config(format!("transform failed: {e}"))),
                        ));
                    }
                }
            }
        }
    }

    cells.sort_by(|a, b| {
        (a.methodology, &a.model, a.hours_out).cmp(&(b.methodology, &b.model, b.hours_out))
    });
    Ok(BenchmarkOutput {
        cells,
        target_histogram,
        prediction_series,
    })
}

fn to_cell(
    methodology: Methodology,
    model: &str,
    hours_out: u32,
    outcome: Result<Vec<EvalReport>>,
) -> CellResult {
    match outcome {
        Ok(reports) => CellResult {
            methodology,
            model: model.to_string(),
            hours_out,
            reports,
            error: None,
        },
        Err(e) => CellResult {
            methodology,
            model: model.to_string(),
            hours_out,
            reports: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Transforms a train/test split with parameters fit on train only.
pub fn fit_pt_split(
    train: &SupervisedDataset,
    test: &SupervisedDataset,
    cfg: &BenchmarkConfig,
) -> Result<(
    SupervisedDataset,
    SupervisedDataset,
    Option<PowerTransformParams>,
    Option<ColumnTransform>,
)> {
    let mut pt_train = train.clone();
    let mut pt_test = test.clone();
    let fp = if cfg.transform_features {
        let params = transform::fit_transformer(&train.x, &train.feature_names)?;
        pt_train.x = transform::apply(&params, &train.x)?;
        pt_test.x = transform::apply(&params, &test.x)?;
        Some(params)
    } else {
        None
    };
    let tp = if cfg.transform_target {
        let ct = transform::fit_column("target", &train.y)?;
        let map = |v: &[f64]| -> Vec<f64> { v.iter().map(|&x| ct.apply(x)).collect() };
        pt_train.y = map(&train.y);
        pt_test.y = map(&test.y);
        pt_train.target_scale = TargetScale::Transformed;
        pt_test.target_scale = TargetScale::Transformed;
        Some(ct)
    } else {
        None
    };
    pt_train.check_finite()?;
    pt_test.check_finite()?;
    Ok((pt_train, pt_test, fp, tp))
}

/// Serializes benchmark cells to the comma-separated report table.
pub fn reports_to_csv(cells: &[CellResult]) -> String {
    let mut out = String::from("methodology,model,hours_out,scale,r2,mae,rmse\n");
    for c in cells {
        for r in &c.reports {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.methodology.as_str(),
                r.model,
                r.hours_out,
                r.scale.as_str(),
                r.r2,
                r.mae,
                r.rmse
            );
        }
    }
    out
}

/// Human-readable aligned table, one section per methodology.
pub fn reports_to_text(cells: &[CellResult]) -> String {
    let mut out = String::new();
    let mut by_method: BTreeMap<Methodology, Vec<&CellResult>> = BTreeMap::new();
    for c in cells {
        by_method.entry(c.methodology).or_default().push(c);
    }
    for (method, group) in by_method {
        let _ = writeln!(out, "== {} ==", method.as_str());
        let _ = writeln!(
            out,
            "{:<30} {:>9} {:>12} {:>10} {:>10} {:>10}",
            "Model", "Hours Out", "Scale", "R2", "MAE", "RMSE"
        );
        for c in group {
            if let Some(err) = &c.error {
                let _ = writeln!(out, "{:<30} {:>9}  ERROR: {err}", c.model, c.hours_out);
            }
            for r in &c.reports {
                let _ = writeln!(
                    out,
                    "{:<30} {:>9} {:>12} {:>10.4} {:>10.4} {:>10.4}",
                    r.model,
                    r.hours_out,
                    r.scale.as_str(),
                    r.r2,
                    r.mae,
                    r.rmse
                );
            }
        }
        out.push('\n');
    }
    out
}

/// Monthly total generation, the seasonality series.
pub fn monthly_generation(table: &TimeTable) -> Vec<(String, f64)> {
    let mut totals: BTreeMap<(i32, u32), f64> = BTreeMap::new();
    for r in &table.rows {
        if let Some(g) = r.generation {
            *totals.entry((r.ts.year(), r.ts.month())).or_insert(0.0) += g;
        }
    }
    totals
        .into_iter()
        .map(|((y, m), v)| (format!("{y:04}-{m:02}"), v))
        .collect()
}

/// Fixed-width histogram over `bins` buckets; returns (bin center, count).
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut counts = vec![0usize; bins];
    for &v in values {
        let mut b = ((v - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + width * (i as f64 + 0.5), c))
        .collect()
}

/// Writes the plot-data CSVs: monthly seasonality, actual-vs-predicted
/// series, and the before/after target histograms. Returns the file names
/// written.
pub fn emit_plot_data(
    table: &TimeTable,
    output: &BenchmarkOutput,
    dir: &Path,
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut monthly = String::from("series_name,x,y\n");
    for (month, total) in monthly_generation(table) {
        let _ = writeln!(monthly, "monthly_generation,{month},{total}");
    }
    crate::persist::atomic_write(&dir.join("plot_monthly_generation.csv"), monthly.as_bytes())?;
    written.push("plot_monthly_generation.csv".to_string());

    if let Some(series) = &output.prediction_series {
        let mut csv = String::from("series_name,x,y\n");
        for (ts, v) in series.timestamps.iter().zip(&series.actual) {
            let _ = writeln!(csv, "actual,{},{v}", ts.format("%Y-%m-%d %H:%M:%S"));
        }
        for (ts, v) in series.timestamps.iter().zip(&series.predicted) {
            let _ = writeln!(csv, "predicted,{},{v}", ts.format("%Y-%m-%d %H:%M:%S"));
        }
        crate::persist::atomic_write(&dir.join("plot_prediction_series.csv"), csv.as_bytes())?;
        written.push("plot_prediction_series.csv".to_string());
    }

    if let Some((raw, transformed)) = &output.target_histogram {
        let mut csv = String::from("series_name,x,y\n");
        for (center, count) in histogram(raw, 40) {
            let _ = writeln!(csv, "target_raw,{center},{count}");
        }
        for (center, count) in histogram(transformed, 40) {
            let _ = writeln!(csv, "target_transformed,{center},{count}");
        }
        crate::persist::atomic_write(&dir.join("plot_target_histogram.csv"), csv.as_bytes())?;
        written.push("plot_target_histogram.csv".to_string());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Matrix;
    use crate::models::gbm::GbmConfig;
    use crate::models::tree::TreeConfig;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_prediction_metrics() {
        let y = vec![1.0, 2.0, 3.0];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        assert_eq!(mae(&y, &y).unwrap(), 0.0);
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_example() {
        // SST = 6, SSE = 2: r2 = 2/3, mae = 2/3, rmse = sqrt(2/3).
        let y = vec![0.0, 0.0, 3.0];
        let yhat = vec![0.0, 1.0, 2.0];
        assert!((r2(&y, &yhat).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((mae(&y, &yhat).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((rmse(&y, &yhat).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mean_predictor_scores_zero_r2() {
        let y = vec![1.0, 2.0, 3.0, 6.0];
        let mean = y.iter().sum::<f64>() / 4.0;
        let yhat = vec![mean; 4];
        assert!(r2(&y, &yhat).unwrap().abs() < 1e-12);
    }

    #[test]
    fn constant_targets_make_r2_undefined() {
        let y = vec![2.0; 5];
        assert!(matches!(r2(&y, &y), Err(ToolError::NonFinite(_))));
    }

    #[test]
    fn length_mismatch_is_config_error() {
        assert!(matches!(
            mae(&[1.0], &[1.0, 2.0]),
            Err(ToolError::Config(_))
        ));
    }

    #[test]
    fn rmse_dominates_mae_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..1000 {
            let n = rng.gen_range(2..50);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let yhat: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
            assert!(rmse(&y, &yhat).unwrap() >= mae(&y, &yhat).unwrap() - 1e-12);
        }
    }

    #[test]
    fn r2_invariant_under_common_affine_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let y: Vec<f64> = (0..30).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let yhat: Vec<f64> = (0..30).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let base = r2(&y, &yhat).unwrap();
        for (a, b) in [(2.0, 3.0), (0.1, -7.0), (5.5, 0.0)] {
            let ya: Vec<f64> = y.iter().map(|v| a * v + b).collect();
            let yh: Vec<f64> = yhat.iter().map(|v| a * v + b).collect();
            assert!((r2(&ya, &yh).unwrap() - base).abs() < 1e-9);
            assert!((mae(&ya, &yh).unwrap() - a.abs() * mae(&y, &yhat).unwrap()).abs() < 1e-9);
            assert!((rmse(&ya, &yh).unwrap() - a.abs() * rmse(&y, &yhat).unwrap()).abs() < 1e-9);
        }
    }

    fn toy_dataset(n: usize, seed: u64) -> SupervisedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] - r[1] + 1.0).collect();
        let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        SupervisedDataset {
            x: Matrix::from_rows(&rows),
            y,
            feature_names: vec!["a".into(), "b".into()],
            timestamps: (0..n).map(|i| start + chrono::Duration::hours(i as i64)).collect(),
            horizon_hours: 24,
            target_scale: TargetScale::Raw,
        }
    }

    #[test]
    fn noiseless_linear_data_gives_unit_r2_in_every_fold() {
        let ds = toy_dataset(60, 1);
        let spec = ModelSpec::Linear { l2: 0.0 };
        let cv = cross_validate(&spec, &ds, &FoldPlan::default(), Scoring::R2).unwrap();
        assert_eq!(cv.fold_scores.len(), 5);
        for s in &cv.fold_scores {
            assert!((s - 1.0).abs() < 1e-9);
        }
        assert!(cv.sd < 1e-9);
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let ds = toy_dataset(40, 2);
        let base = ModelSpec::Linear { l2: 0.0 };
        let grid = GridSpec {
            params: vec![("l2".into(), vec![0.25])],
            scoring: Scoring::R2,
            folds: FoldPlan::default(),
        };
        let res = grid_search(&base, &grid, &ds).unwrap();
        assert_eq!(res.best_assignment, vec![("l2".to_string(), 0.25)]);
        assert_eq!(res.table.len(), 5);
    }

    #[test]
    fn grid_recovers_the_generating_tree_depth() {
        // Depth-2 ground truth: y depends on two nested thresholds. A
        // depth-1 stump underfits and depth-3 overfits the validation folds.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 240;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| {
                let base = if r[0] <= 0.0 {
                    if r[1] <= 0.0 { 0.0 } else { 4.0 }
                } else if r[1] <= 0.0 {
                    8.0
                } else {
                    12.0
                };
                base + rng.gen_range(-0.8..0.8)
            })
            .collect();
        let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let ds = SupervisedDataset {
            x: Matrix::from_rows(&rows),
            y,
            feature_names: vec!["a".into(), "b".into()],
            timestamps: (0..n).map(|i| start + chrono::Duration::hours(i as i64)).collect(),
            horizon_hours: 24,
            target_scale: TargetScale::Raw,
        };
        let base = ModelSpec::GradientBoosting(GbmConfig {
            n_stages: 1,
            learning_rate: 1.0,
            max_depth: 2,
            min_samples_leaf: 5,
            ..Default::default()
        });
        let grid = GridSpec {
            params: vec![("max_depth".into(), vec![1.0, 2.0, 3.0])],
            scoring: Scoring::R2,
            folds: FoldPlan::default(),
        };
        let res = grid_search(&base, &grid, &ds).unwrap();
        assert_eq!(res.best_assignment[0].1, 2.0, "selected {:?}", res.best_assignment);
        assert_eq!(res.table.len(), 15);
        // Argmax property: best mean dominates every grid point.
        for depth in [1.0, 2.0, 3.0] {
            let mean: f64 = res
                .table
                .iter()
                .filter(|r| r.assignment[0].1 == depth)
                .map(|r| r.score)
                .sum::<f64>()
                / 5.0;
            assert!(res.best_mean_score >= mean - 1e-12);
        }
        let _ = TreeConfig::default();
    }

    #[test]
    fn shuffled_fold_order_keeps_the_score_multiset() {
        let ds = toy_dataset(50, 4);
        let spec = ModelSpec::Linear { l2 : 0.1 };
        let a = cross_validate(&spec, &ds, &FoldPlan { k: 5, shuffled: None }, Scoring::R2).unwrap();
        let b = cross_validate(&spec, &ds, &FoldPlan { k: 5, shuffled: None }, Scoring::R2).unwrap();
        let mut sa = a.fold_scores.clone();
        let mut sb = b.fold_scores.clone();
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        assert_eq!(sa, sb);
    }
}
