//! Core domain types: timestamps, the merged hourly table, the supervised
//! dataset, and a small row-major matrix.
//!
//! All types are immutable after construction and safe to share across
//! threads. Missing values carry an explicit `None`, never a sentinel
//! number, so downstream transforms see only real observations.

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ToolError};

/// Hour-resolution, timezone-naive local timestamp.
pub type Timestamp = NaiveDateTime;

/// Names of the fixed feature columns, in storage order.
pub const WEATHER_COLUMNS: [&str; 6] = [
    "air_temp",
    "apparent_temp",
    "dew_point",
    "wind_speed",
    "wind_direction",
    "humidity",
];

/// One (possibly sub-hourly) observation row.
///
/// `generation` is energy in kWh over the sampling interval; weather fields
/// use SI-adjacent units (°C, m/s, degrees, percent). A field is `None` when
/// the source cell was absent or unparseable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyRecord {
    pub ts: Timestamp,
    pub generation: Option<f64>,
    pub air_temp: Option<f64>,
    pub apparent_temp: Option<f64>,
    pub dew_point: Option<f64>,
    pub wind_speed: Option<f64>,
    pub wind_direction: Option<f64>,
    pub humidity: Option<f64>,
    pub aqi: Option<f64>,
    /// Static/extra columns (panel metadata etc.), aligned with
    /// [`TimeTable::extra_names`].
    pub extra: Vec<Option<f64>>,
    /// True when this hour had no source rows at all after resampling.
    pub is_gap: bool,
}

impl HourlyRecord {
    pub fn empty(ts: Timestamp, n_extra: usize) -> Self {
        HourlyRecord {
            ts,
            generation: None,
            air_temp: None,
            apparent_temp: None,
            dew_point: None,
            wind_speed: None,
            wind_direction: None,
            humidity: None,
            aqi: None,
            extra: vec![None; n_extra],
            is_gap: false,
        }
    }

    /// Fixed-field value by column name (extras excluded).
    pub fn field(&self, name: &str) -> Option<f64> {
        match name {
            "generation" => self.generation,
            "air_temp" => self.air_temp,
            "apparent_temp" => self.apparent_temp,
            "dew_point" => self.dew_point,
            "wind_speed" => self.wind_speed,
            "wind_direction" => self.wind_direction,
            "humidity" => self.humidity,
            "aqi" => self.aqi,
            _ => None,
        }
    }

    pub fn set_field(&mut self, name: &str, v: Option<f64>) {
        match name {
            "generation" => self.generation = v,
            "air_temp" => self.air_temp = v,
            "apparent_temp" => self.apparent_temp = v,
            "dew_point" => self.dew_point = v,
            "wind_speed" => self.wind_speed = v,
            "wind_direction" => self.wind_direction = v,
            "humidity" => self.humidity = v,
            "aqi" => self.aqi = v,
            _ => {}
        }
    }
}

/// Timestamp-ordered table of generation + weather + AQI observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTable {
    pub rows: Vec<HourlyRecord>,
    /// Names for the per-row `extra` columns.
    pub extra_names: Vec<String>,
}

/// One validation finding: which row/column broke which rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub column: String,
    pub rule: String,
    /// Warnings flag suspicious-but-plausible values (e.g. generation above
    /// the configured physical maximum); errors break pipeline invariants.
    pub warning: bool,
}

/// Upper generation bound used as a warning threshold by [`validate_table`].
pub const DEFAULT_GENERATION_MAX: f64 = 320.0;

impl TimeTable {
    pub fn new(rows: Vec<HourlyRecord>, extra_names: Vec<String>) -> Self {
        TimeTable { rows, extra_names }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Count of missing cells per fixed column, a cheap ingest diagnostic.
    pub fn missing_counts(&self) -> Vec<(String, usize)> {
        let mut names: Vec<&str> = vec!["generation"];
        names.extend(WEATHER_COLUMNS);
        names.push("aqi");
        names
            .iter()
            .map(|n| {
                let c = self.rows.iter().filter(|r| r.field(n).is_none()).count();
                (n.to_string(), c)
            })
            .collect()
    }
}

/// Checks every table invariant and returns the findings; an empty list means
/// the table is well-formed. Diagnostics, not failure: this never errors.
pub fn validate_table(t: &TimeTable) -> Vec<Violation> {
    validate_table_with_max(t, DEFAULT_GENERATION_MAX)
}

pub fn validate_table_with_max(t: &TimeTable, generation_max: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |row, column: &str, rule: &str, warning| {
        out.push(Violation {
            row,
            column: column.to_string(),
            rule: rule.to_string(),
            warning,
        })
    };
    for (i, r) in t.rows.iter().enumerate() {
        if i > 0 && r.ts <= t.rows[i - 1].ts {
            push(i, "ts", "strictly increasing timestamps", false);
        }
        if r.ts.minute() != 0 || r.ts.second() != 0 {
            push(i, "ts", "hour-aligned timestamp", false);
        }
        if let Some(g) = r.generation {
            if !g.is_finite() {
                push(i, "generation", "finite value", false);
            } else if g < 0.0 {
                push(i, "generation", "generation non-negative", false);
            } else if g > generation_max {
                push(i, "generation", "generation within configured maximum", true);
            }
        }
        for name in WEATHER_COLUMNS {
            if let Some(v) = r.field(name) {
                if !v.is_finite() {
                    push(i, name, "finite value", false);
                }
            }
        }
        if let Some(w) = r.wind_speed {
            if w < 0.0 {
                push(i, "wind_speed", "wind speed non-negative", false);
            }
        }
        if let Some(d) = r.wind_direction {
            if !(0.0..360.0).contains(&d) {
                push(i, "wind_direction", "wind direction in [0,360)", false);
            }
        }
        if let Some(h) = r.humidity {
            if !(0.0..=100.0).contains(&h) {
                push(i, "humidity", "humidity in [0,100]", false);
            }
        }
        if let Some(a) = r.aqi {
            if !a.is_finite() || a < 0.0 {
                push(i, "aqi", "aqi non-negative", false);
            }
        }
    }
    out
}

/// Row-major dense matrix of feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Matrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Matrix { n_rows, n_cols, data }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1))
    }

    /// New matrix keeping only the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            n_rows: idx.len(),
            n_cols: self.n_cols,
            data,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }
}

/// Whether targets (and features) are on the raw kWh scale or the
/// power-transformed scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScale {
    Raw,
    Transformed,
}

/// Feature matrix + horizon-shifted target vector ready for model fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedDataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    /// Feature-time timestamps, one per row (targets live `horizon_hours`
    /// later).
    pub timestamps: Vec<Timestamp>,
    pub horizon_hours: u32,
    pub target_scale: TargetScale,
}

impl SupervisedDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Every entry of X and y must be finite; construction sites enforce this.
    pub fn check_finite(&self) -> Result<()> {
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(ToolError::NonFinite("feature matrix contains NaN/Inf".into()));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(ToolError::NonFinite("target vector contains NaN/Inf".into()));
        }
        Ok(())
    }

    /// Sub-dataset with the given rows, preserving order.
    pub fn select(&self, idx: &[usize]) -> SupervisedDataset {
        SupervisedDataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            timestamps: idx.iter().map(|&i| self.timestamps[i]).collect(),
            horizon_hours: self.horizon_hours,
            target_scale: self.target_scale,
        }
    }
}
