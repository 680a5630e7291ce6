//! CSV ingestion: parse the three source families (solar generation,
//! weather, AQI), resample to hourly resolution, and merge on time.
//!
//! Parsing is header-driven, so column order in the file does not matter.
//! Unparseable cells become missing flags with a counted diagnostic rather
//! than hard failures; whole-row failures beyond a 10% tolerance abort with
//! a parse error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};

use crate::data::{HourlyRecord, TimeTable, Timestamp, WEATHER_COLUMNS};
use crate::error::{Result, ToolError};

/// Which source family a CSV file belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// `timestamp,generation_kwh[,site_id,panel_count,inverter_type]`, 15-min cadence.
    Solar15Min,
    /// `timestamp,air_temp,apparent_temp,dew_point,wind_speed,wind_direction,humidity`.
    Weather,
    /// `date,aqi` (daily) or `timestamp,aqi` (hourly), auto-detected by header.
    AqiDaily,
}

/// Expected columns and timestamp format for one source kind.
#[derive(Debug, Clone)]
pub struct SourceSchema {
    pub kind: SourceKind,
    pub required: Vec<&'static str>,
    pub optional: Vec<&'static str>,
    pub timestamp_format: &'static str,
}

impl SourceSchema {
    pub fn for_kind(kind: SourceKind) -> Self {
        match kind {
            SourceKind::Solar15Min => SourceSchema {
                kind,
                required: vec!["timestamp", "generation_kwh"],
                optional: vec!["site_id", "panel_count", "inverter_type"],
                timestamp_format: "%Y-%m-%d %H:%M:%S",
            },
            SourceKind::Weather => SourceSchema {
                kind,
                required: {
                    let mut v = vec!["timestamp"];
                    v.extend(WEATHER_COLUMNS);
                    v
                },
                optional: vec![],
                timestamp_format: "%Y-%m-%d %H:%M:%S",
            },
            SourceKind::AqiDaily => SourceSchema {
                kind,
                required: vec!["aqi"],
                optional: vec!["date", "timestamp"],
                timestamp_format: "%Y-%m-%d %H:%M:%S",
            },
        }
    }
}

/// Cell- and row-level findings from one parse.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseDiagnostics {
    /// Cells present in the file but not interpretable as their column's type.
    pub unparseable_cells: usize,
    /// Rows skipped outright (bad timestamp or wrong field count).
    pub malformed_rows: usize,
}

/// Fraction of malformed rows tolerated before the whole file is rejected.
const MALFORMED_TOLERANCE: f64 = 0.10;

/// Parses one CSV file against a schema into a (possibly sub-hourly) table.
pub fn parse_csv(path: &Path, schema: &SourceSchema) -> Result<(TimeTable, ParseDiagnostics)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| ToolError::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{}: {e}", path.display()))))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| ToolError::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    // Header must contain every required column exactly once.
    let mut col_idx: BTreeMap<String, usize> = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        if col_idx.insert(h.clone(), i).is_some() {
            return Err(ToolError::Schema(format!(
                "{}: duplicate column `{h}`",
                path.display()
            )));
        }
    }
    for req in &schema.required {
        if !col_idx.contains_key(*req) {
            return Err(ToolError::Schema(format!(
                "{}: missing required column `{req}`",
                path.display()
            )));
        }
    }
    // AQI files must carry a time column of one of the two accepted shapes.
    let aqi_time_col = if schema.kind == SourceKind::AqiDaily {
        if col_idx.contains_key("timestamp") {
            Some(("timestamp", true))
        } else if col_idx.contains_key("date") {
            Some(("date", false))
        } else {
            return Err(ToolError::Schema(format!(
                "{}: AQI file needs a `date` or `timestamp` column",
                path.display()
            )));
        }
    } else {
        None
    };

    // Extra (static) columns, kept in header order for determinism.
    let mut extra_names: Vec<String> = Vec::new();
    let mut categorical: BTreeMap<String, Vec<String>> = BTreeMap::new();
    if schema.kind == SourceKind::Solar15Min {
        for opt in &schema.optional {
            if col_idx.contains_key(*opt) {
                extra_names.push(opt.to_string());
                if *opt == "site_id" || *opt == "inverter_type" {
                    categorical.insert(opt.to_string(), Vec::new());
                }
            }
        }
    }

    let mut diags = ParseDiagnostics::default();
    let mut rows: Vec<HourlyRecord> = Vec::new();
    let mut total_rows = 0usize;

    for record in reader.records() {
        total_rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                diags.malformed_rows += 1;
                continue;
            }
        };
        let cell = |name: &str| -> Option<&str> {
            col_idx.get(name).and_then(|&i| record.get(i)).map(str::trim)
        };

        let ts = match schema.kind {
            SourceKind::AqiDaily => {
                let (name, with_time) = aqi_time_col.unwrap();
                parse_time(cell(name), with_time, schema.timestamp_format)
            }
            _ => parse_time(cell("timestamp"), true, schema.timestamp_format),
        };
        let ts = match ts {
            Some(ts) => ts,
            None => {
                diags.malformed_rows += 1;
                continue;
            }
        };

        let mut row = HourlyRecord::empty(ts, extra_names.len());
        let numeric = |raw: Option<&str>, diags: &mut ParseDiagnostics| -> Option<f64> {
            match raw {
                None | Some("") => None,
                Some(s) => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    _ => {
                        diags.unparseable_cells += 1;
                        None
                    }
                },
            }
        };

        match schema.kind {
            SourceKind::Solar15Min => {
                row.generation = numeric(cell("generation_kwh"), &mut diags);
                for (k, name) in extra_names.iter().enumerate() {
                    row.extra[k] = if let Some(seen) = categorical.get_mut(name.as_str()) {
                        // Categorical: integer code by first-appearance order.
                        cell(name).filter(|s| !s.is_empty()).map(|s| {
                            match seen.iter().position(|v| v == s) {
                                Some(i) => i as f64,
                                None => {
                                    seen.push(s.to_string());
                                    (seen.len() - 1) as f64
                                }
                            }
                        })
                    } else {
                        numeric(cell(name), &mut diags)
                    };
                }
            }
            SourceKind::Weather => {
                for name in WEATHER_COLUMNS {
                    let v = numeric(cell(name), &mut diags);
                    row.set_field(name, v);
                }
            }
            SourceKind::AqiDaily => {
                row.aqi = numeric(cell("aqi"), &mut diags);
            }
        }
        rows.push(row);
    }

    if total_rows > 0 && (diags.malformed_rows as f64) / (total_rows as f64) > MALFORMED_TOLERANCE {
        return Err(ToolError::Parse(format!(
            "{}: {} of {} rows malformed",
            path.display(),
            diags.malformed_rows,
            total_rows
        )));
    }

    rows.sort_by_key(|r| r.ts);
    Ok((TimeTable::new(rows, extra_names), diags))
}

fn parse_time(raw: Option<&str>, with_time: bool, fmt: &str) -> Option<Timestamp> {
    let raw = raw?;
    if with_time {
        NaiveDateTime::parse_from_str(raw, fmt).ok()
    } else {
        NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .ok()
            .and_then(|d| d.and_hms_opt(0, 0, 0))
    }
}

/// Aggregation rule for the generation column during resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationAgg {
    /// Energy over the hour; preserves totals (the default).
    Sum,
    Mean,
}

/// Collapses a sorted (sub-)hourly table to one row per clock hour.
///
/// Generation aggregates by `agg`; weather, AQI and extra columns by mean
/// (wind direction by circular mean). Hours inside the covered range with no
/// source rows are emitted as explicit gap rows.
pub fn resample_hourly(t: &TimeTable, agg: GenerationAgg) -> Result<TimeTable> {
    if t.is_empty() {
        return Err(ToolError::Gap("cannot resample an empty table".into()));
    }
    use chrono::Timelike;
    let floor = |ts: Timestamp| -> Timestamp { ts.date().and_hms_opt(ts.hour(), 0, 0).unwrap() };
    let start = floor(t.rows[0].ts);
    let end = floor(t.rows[t.len() - 1].ts);

    let mut buckets: BTreeMap<Timestamp, Vec<&HourlyRecord>> = BTreeMap::new();
    for r in &t.rows {
        buckets.entry(floor(r.ts)).or_default().push(r);
    }

    let n_extra = t.extra_names.len();
    let mut rows = Vec::new();
    let mut cursor = start;
    while cursor <= end {
        let mut out = HourlyRecord::empty(cursor, n_extra);
        match buckets.get(&cursor) {
            None => out.is_gap = true,
            Some(src) if src.iter().all(|r| r.is_gap) => out.is_gap = true,
            Some(src) if src.len() == 1 => {
                // Pass single rows through untouched so hourly input is a
                // fixed point of mean-resampling.
                out = (*src[0]).clone();
                out.ts = cursor;
            }
            Some(src) => {
                out.generation = match agg {
                    GenerationAgg::Sum => fold(src, |r| r.generation, Fold::Sum),
                    GenerationAgg::Mean => fold(src, |r| r.generation, Fold::Mean),
                };
                for name in WEATHER_COLUMNS {
                    let v = if name == "wind_direction" {
                        circular_mean(src.iter().filter_map(|r| r.wind_direction))
                    } else {
                        fold(src, |r| r.field(name), Fold::Mean)
                    };
                    out.set_field(name, v);
                }
                out.aqi = fold(src, |r| r.aqi, Fold::Mean);
                for k in 0..n_extra {
                    out.extra[k] = fold(src, |r| r.extra[k], Fold::Mean);
                }
            }
        }
        rows.push(out);
        cursor += Duration::hours(1);
    }
    Ok(TimeTable::new(rows, t.extra_names.clone()))
}

enum Fold {
    Sum,
    Mean,
}

fn fold<F: Fn(&HourlyRecord) -> Option<f64>>(src: &[&HourlyRecord], get: F, how: Fold) -> Option<f64> {
    let vals: Vec<f64> = src.iter().filter_map(|r| get(r)).collect();
    if vals.is_empty() {
        return None;
    }
    let sum: f64 = vals.iter().sum();
    Some(match how {
        Fold::Sum => sum,
        Fold::Mean => sum / vals.len() as f64,
    })
}

fn circular_mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut c, mut n) = (0.0f64, 0.0f64, 0usize);
    for d in values {
        let r = d.to_radians();
        s += r.sin();
        c += r.cos();
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let deg = s.atan2(c).to_degrees().rem_euclid(360.0);
    Some(if deg >= 360.0 { 0.0 } else { deg })
}

/// Staleness limit for AQI carry-forward, in hours.
pub const DEFAULT_AQI_STALENESS_HOURS: i64 = 48;

/// Row-drop accounting from a merge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MergeDiagnostics {
    /// Hours where solar and weather did not both provide a complete row.
    pub dropped_incomplete: usize,
    /// Hours dropped because the latest AQI reading was older than the limit.
    pub dropped_stale_aqi: usize,
}

/// Inner-joins hourly solar and weather tables and attaches AQI by
/// most-recent-value carry-forward (staleness-limited to avoid using air
/// quality readings that are days old).
///
/// Hours inside the joined range that lack any required feature are emitted
/// as gap rows and counted in the diagnostics.
pub fn merge_sources(
    solar: &TimeTable,
    weather: &TimeTable,
    aqi: &TimeTable,
    staleness_hours: i64,
) -> Result<(TimeTable, MergeDiagnostics)> {
    let solar_map: BTreeMap<Timestamp, &HourlyRecord> =
        solar.rows.iter().filter(|r| !r.is_gap).map(|r| (r.ts, r)).collect();
    let weather_map: BTreeMap<Timestamp, &HourlyRecord> =
        weather.rows.iter().filter(|r| !r.is_gap).map(|r| (r.ts, r)).collect();
    let aqi_series: Vec<(Timestamp, f64)> = aqi
        .rows
        .iter()
        .filter_map(|r| r.aqi.map(|v| (r.ts, v)))
        .collect();

    let start = solar_map.keys().next().zip(weather_map.keys().next());
    let end = solar_map.keys().last().zip(weather_map.keys().last());
    let (start, end) = match (start, end) {
        (Some((s0, w0)), Some((s1, w1))) => ((*s0).max(*w0), (*s1).min(*w1)),
        _ => return Err(ToolError::Gap("merge produced no rows".into())),
    };
    if start > end {
        return Err(ToolError::Gap("solar and weather time ranges are disjoint".into()));
    }

    let mut diags = MergeDiagnostics::default();
    let n_extra = solar.extra_names.len();
    let mut rows = Vec::new();
    let mut aqi_cursor = 0usize;
    let mut cursor = start;
    while cursor <= end {
        // Latest AQI reading at or before this hour.
        while aqi_cursor < aqi_series.len() && aqi_series[aqi_cursor].0 <= cursor {
            aqi_cursor += 1;
        }
        let last_aqi = aqi_cursor.checked_sub(1).map(|i| aqi_series[i]);

        let mut out = HourlyRecord::empty(cursor, n_extra);
        let complete = match (solar_map.get(&cursor), weather_map.get(&cursor)) {
            (Some(s), Some(w)) => {
                out.generation = s.generation;
                out.extra = s.extra.clone();
                for name in WEATHER_COLUMNS {
                    out.set_field(name, w.field(name));
                }
                let aqi_fresh = match last_aqi {
                    Some((ats, v)) if (cursor - ats) <= Duration::hours(staleness_hours) => {
                        out.aqi = Some(v);
                        true
                    }
                    _ => false,
                };
                let cells_ok = out.generation.is_some()
                    && WEATHER_COLUMNS.iter().all(|n| out.field(n).is_some());
                if !aqi_fresh {
                    diags.dropped_stale_aqi += 1;
                } else if !cells_ok {
                    diags.dropped_incomplete += 1;
                }
                aqi_fresh && cells_ok
            }
            _ => {
                diags.dropped_incomplete += 1;
                false
            }
        };
        if !complete {
            out = HourlyRecord::empty(cursor, n_extra);
            out.is_gap = true;
        }
        rows.push(out);
        cursor += Duration::hours(1);
    }

    if rows.iter().all(|r| r.is_gap) {
        return Err(ToolError::Gap("merge produced only gap rows".into()));
    }
    Ok((TimeTable::new(rows, solar.extra_names.clone()), diags))
}

/// Serializes a merged hourly table to CSV (gap rows become empty cells).
pub fn write_table_csv(t: &TimeTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("timestamp,generation,air_temp,apparent_temp,dew_point,wind_speed,wind_direction,humidity,aqi");
    for name in &t.extra_names {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &t.rows {
        let _ = write!(out, "{}", r.ts.format("%Y-%m-%d %H:%M:%S"));
        for name in ["generation"].iter().chain(WEATHER_COLUMNS.iter()).chain(["aqi"].iter()) {
            let _ = write!(out, ",{}", fmt(r.field(name)));
        }
        for v in &r.extra {
            let _ = write!(out, ",{}", fmt(*v));
        }
        out.push('\n');
    }
    crate::persist::atomic_write(path, out.as_bytes())
}

/// Reads a table previously written by [`write_table_csv`].
pub fn read_table_csv(path: &Path) -> Result<TimeTable> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ToolError::Schema(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let fixed = ["timestamp", "generation", "air_temp", "apparent_temp", "dew_point", "wind_speed", "wind_direction", "humidity", "aqi"];
    if cols.len() < fixed.len() || cols[..fixed.len()] != fixed {
        return Err(ToolError::Schema(format!(
            "{}: not a merged table file",
            path.display()
        )));
    }
    let extra_names: Vec<String> = cols[fixed.len()..].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(ToolError::Parse(format!(
                "{}: row {} has {} cells, expected {}",
                path.display(),
                lineno + 2,
                cells.len(),
                cols.len()
            )));
        }
        let ts = NaiveDateTime::parse_from_str(cells[0], "%Y-%m-%d %H:%M:%S")
            .map_err(|e| ToolError::Parse(format!("{}: row {}: {e}", path.display(), lineno + 2)))?;
        let mut r = HourlyRecord::empty(ts, extra_names.len());
        let parse = |s: &str| -> Option<f64> {
            if s.is_empty() {
                None
            } else {
                s.parse().ok()
            }
        };
        r.generation = parse(cells[1]);
        for (k, name) in WEATHER_COLUMNS.iter().enumerate() {
            r.set_field(name, parse(cells[2 + k]));
        }
        r.aqi = parse(cells[8]);
        for k in 0..extra_names.len() {
            r.extra[k] = parse(cells[9 + k]);
        }
        r.is_gap = r.generation.is_none() && WEATHER_COLUMNS.iter().all(|n| r.field(n).is_none());
        rows.push(r);
    }
    Ok(TimeTable::new(rows, extra_names))
}
