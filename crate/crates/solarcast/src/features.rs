//! Supervised dataset construction: horizon-shifted targets, autoregressive
//! lags, calendar encodings, chronological splits, and blocked CV folds.
//!
//! Leakage hygiene is the whole point here: every feature of row i is a
//! function of data at timestamps <= ts_i, and the target lives exactly
//! `horizon` hours later.

use std::f64::consts::TAU;

use chrono::{Datelike, Timelike};
use serde::{Deserialize, Serialize};

use crate::data::{Matrix, SupervisedDataset, TargetScale, TimeTable, WEATHER_COLUMNS};
use crate::error::{Result, ToolError};

/// Train/test partition rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// First `ceil(f*n)` rows train, the rest test, no shuffling (default).
    Chronological,
    /// Seeded permutation; retained to probe how much adjacent-hour
    /// autocorrelation inflates test scores.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            mode: SplitMode::Chronological,
        }
    }
}

/// Blocked cross-validation plan: k contiguous validation blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Seeded row shuffle before blocking; blocked contiguous folds are
    /// the time-series-safe default.
    pub shuffled: Option<u64>,
}

impl Default for FoldPlan {
    fn default() -> Self {
        FoldPlan { k: 5, shuffled: None }
    }
}

/// One CV fold: fit on `fit`, validate on `validate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub fit: Vec<usize>,
    pub validate: Vec<usize>,
}

/// Builds the horizon-shifted supervised dataset from a validated hourly
/// table.
///
/// Features per row: the six weather columns, AQI, any static extra columns,
/// and generation at each requested lag (hours back; 0 = now). Target is
/// generation `horizon_hours` later. Rows whose target, features, or any lag
/// fall in a gap are dropped; the final `horizon` hours produce no rows.
pub fn make_supervised(
    t: &TimeTable,
    horizon_hours: u32,
    lags: &[u32],
) -> Result<SupervisedDataset> {
    if !matches!(horizon_hours, 24 | 48 | 72) {
        return Err(ToolError::Config(format!(
            "horizon must be one of 24/48/72, got {horizon_hours}"
        )));
    }
    let n = t.len();
    let h = horizon_hours as usize;

    let mut feature_names: Vec<String> = WEATHER_COLUMNS.iter().map(|s| s.to_string()).collect();
    feature_names.push("aqi".into());
    feature_names.extend(t.extra_names.iter().cloned());
    let mut sorted_lags: Vec<u32> = lags.to_vec();
    sorted_lags.sort_unstable();
    sorted_lags.dedup();
    for l in &sorted_lags {
        feature_names.push(format!("gen_lag_{l}"));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    let mut timestamps = Vec::new();
    for i in 0..n.saturating_sub(h) {
        let r = &t.rows[i];
        if r.is_gap {
            continue;
        }
        let target = match t.rows[i + h] {
            ref tr if !tr.is_gap => tr.generation,
            _ => None,
        };
        let Some(target) = target else { continue };

        let mut feat = Vec::with_capacity(feature_names.len());
        let mut ok = true;
        for name in WEATHER_COLUMNS {
            match r.field(name) {
                Some(v) => feat.push(v),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            match r.aqi {
                Some(v) => feat.push(v),
                None => ok = false,
            }
        }
        if ok {
            for v in &r.extra {
                match v {
                    Some(v) => feat.push(*v),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if ok {
            for &l in &sorted_lags {
                let l = l as usize;
                let lagged = if i >= l && !t.rows[i - l].is_gap {
                    t.rows[i - l].generation
                } else {
                    None
                };
                match lagged {
                    Some(v) => feat.push(v),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        rows.push(feat);
        y.push(target);
        timestamps.push(r.ts);
    }

    let d = feature_names.len();
    if rows.len() < d + 1 {
        return Err(ToolError::EmptySplit(format!(
            "only {} usable rows for {} features at horizon {horizon_hours}",
            rows.len(),
            d
        )));
    }
    let ds = SupervisedDataset {
        x: Matrix::from_rows(&rows),
        y,
        feature_names,
        timestamps,
        horizon_hours,
        target_scale: TargetScale::Raw,
    };
    ds.check_finite()?;
    Ok(ds)
}

/// Appends sin/cos encodings of hour-of-day (period 24) and day-of-year
/// (period 365.25) so models can see the diurnal and seasonal cycles.
pub fn add_calendar_features(ds: &SupervisedDataset) -> SupervisedDataset {
    let mut names = ds.feature_names.clone();
    names.extend(
        ["hour_sin", "hour_cos", "doy_sin", "doy_cos"]
            .iter()
            .map(|s| s.to_string()),
    );
    let rows: Vec<Vec<f64>> = ds
        .x
        .rows()
        .zip(&ds.timestamps)
        .map(|(r, ts)| {
            let mut v = r.to_vec();
            let hour = ts.hour() as f64;
            let ha = TAU * hour / 24.0;
            let doy = (ts.ordinal0() as f64) + hour / 24.0;
            let da = TAU * doy / 365.25;
            v.extend([ha.sin(), ha.cos(), da.sin(), da.cos()]);
            v
        })
        .collect();
    SupervisedDataset {
        x: Matrix::from_rows(&rows),
        y: ds.y.clone(),
        feature_names: names,
        timestamps: ds.timestamps.clone(),
        horizon_hours: ds.horizon_hours,
        target_scale: ds.target_scale,
    }
}

/// Splits a dataset into train and test partitions, both guaranteed
/// non-empty.
pub fn split(ds: &SupervisedDataset, spec: &SplitSpec) -> Result<(SupervisedDataset, SupervisedDataset)> {
    let n = ds.len();
    if n < 2 {
        return Err(ToolError::EmptySplit(format!("{n} rows cannot be split")));
    }
    if !(0.0 < spec.train_fraction && spec.train_fraction < 1.0) {
        return Err(ToolError::Config(format!(
            "train_fraction must be in (0,1), got {}",
            spec.train_fraction
        )));
    }
    let n_train = ((spec.train_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let order: Vec<usize> = match spec.mode {
        SplitMode::Chronological => (0..n).collect(),
        SplitMode::Random { seed } => {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
    };
    Ok((ds.select(&order[..n_train]), ds.select(&order[n_train..])))
}

/// Produces the k (fit, validate) index sets over `n` training rows.
///
/// Default blocked mode: contiguous equal-size validation blocks, remainder
/// rows going to the first block.
pub fn make_cv_folds(n: usize, plan: &FoldPlan) -> Result<Vec<Fold>> {
    if plan.k == 0 || n < plan.k {
        return Err(ToolError::EmptySplit(format!(
            "{n} rows cannot form {} folds",
            plan.k
        )));
    }
    let order: Vec<usize> = match plan.shuffled {
        None => (0..n).collect(),
        Some(seed) => {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
    };
    let base = n / plan.k;
    let rem = n % plan.k;
    let mut folds = Vec::with_capacity(plan.k);
    let mut start = 0usize;
    for f in 0..plan.k {
        let size = if f == 0 { base + rem } else { base };
        let validate: Vec<usize> = order[start..start + size].to_vec();
        let fit: Vec<usize> = order[..start]
            .iter()
            .chain(order[start + size..].iter())
            .copied()
            .collect();
        folds.push(Fold { fit, validate });
        start += size;
    }
    Ok(folds)
}
