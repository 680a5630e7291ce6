//! Command-line pipeline driver: synthesize or ingest data, train and
//! persist models, predict, evaluate, and run the full benchmark matrix.
//!
//! Exit codes: 0 success, 2 ingest/parse failure, 3 training failure,
//! 4 prediction schema mismatch, 5 configuration error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use solarcast::config::{regular_roster, zero_inflated_roster, RunConfig};
use solarcast::data::{validate_table_with_max, SupervisedDataset, TimeTable};
use solarcast::error::{Result, ToolError};
use solarcast::eval::{self, Methodology, NamedModel};
use solarcast::features::{add_calendar_features, make_supervised, split};
use solarcast::ingest::{self, SourceKind, SourceSchema};
use solarcast::models::FittedModel;
use solarcast::persist::{self, ArtifactMeta, ModelArtifact, FORMAT_VERSION};
use solarcast::synth::generate_synthetic;
use solarcast::transform::{ColumnTransform, PowerTransformParams};

#[derive(Parser)]
#[command(name = "solarcast", version, about = "Hourly solar generation forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run configuration; missing file means all defaults.
    #[arg(long, default_value = "solarcast.toml")]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic merged hourly CSV.
    Synth {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        days: Option<usize>,
        /// Output path; defaults to the configured merged_csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse, resample, and merge the raw solar/weather/AQI sources.
    Ingest {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one model and save its artifact.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        /// Model name from the built-in or configured rosters.
        #[arg(long, default_value = "random_forest")]
        model: String,
        #[arg(long, value_parser = parse_methodology, default_value = "regular")]
        methodology: Methodology,
        #[arg(long)]
        horizon: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Predict with a saved artifact over the configured merged table.
    Predict {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "predictions.csv")]
        out: PathBuf,
    },
    /// Score a saved artifact on the held-out test split.
    Evaluate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        model: PathBuf,
    },
    /// Run every methodology, model, and horizon; write reports and plot data.
    Benchmark {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn parse_methodology(s: &str) -> std::result::Result<Methodology, String> {
    match s {
        "regular" => Ok(Methodology::Regular),
        "zero_inflated" => Ok(Methodology::ZeroInflated),
        "power_transform" => Ok(Methodology::PowerTransform),
        other => Err(format!(
            "unknown methodology `{other}` (regular, zero_inflated, power_transform)"
        )),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    if path.exists() {
        RunConfig::load(path)
    } else {
        Ok(RunConfig::default())
    }
}

fn resolve_model(cfg: &RunConfig, name: &str) -> Result<NamedModel> {
    let bc = cfg.benchmark_config();
    bc.regular_models
        .iter()
        .chain(&bc.zero_inflated_models)
        .chain(&bc.power_transform_models)
        .chain(regular_roster().iter())
        .chain(zero_inflated_roster().iter())
        .find(|m| m.name == name)
        .cloned()
        .ok_or_else(|| ToolError::Config(format!("unknown model `{name}`")))
}

fn load_merged(cfg: &RunConfig) -> Result<TimeTable> {
    let table = ingest::read_table_csv(&cfg.data.merged_csv)?;
    let violations = validate_table_with_max(&table, cfg.data.generation_max);
    let errors: Vec<_> = violations.iter().filter(|v| !v.warning).collect();
    for v in violations.iter().filter(|v| v.warning) {
        eprintln!("warning: row {} {}: {}", v.row, v.column, v.rule);
    }
    if let Some(v) = errors.first() {
        return Err(ToolError::Schema(format!(
            "{}: row {} {}: {} ({} violations total)",
            cfg.data.merged_csv.display(),
            v.row,
            v.column,
            v.rule,
            errors.len()
        )));
    }
    Ok(table)
}

fn build_dataset(cfg: &RunConfig, table: &TimeTable, horizon: u32) -> Result<SupervisedDataset> {
    let ds = make_supervised(table, horizon, &cfg.features.lags)?;
    Ok(if cfg.features.calendar { add_calendar_features(&ds) } else { ds })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { config, seed, days, out } => {
            let cfg = load_config(&config.config)?;
            let seed = seed.unwrap_or(cfg.synth.seed);
            let days = days.unwrap_or(cfg.synth.n_days);
            let out = out.unwrap_or_else(|| cfg.data.merged_csv.clone());
            let table = generate_synthetic(seed, days, &cfg.synth.params);
            ingest::write_table_csv(&table, &out)?;
            println!("wrote {} hourly rows to {}", table.len(), out.display());
            Ok(())
        }
        Command::Ingest { config, out } => {
            let cfg = load_config(&config.config)?;
            let out = out.unwrap_or_else(|| cfg.data.merged_csv.clone());
            let need = |p: &Option<PathBuf>, what: &str| {
                p.clone().ok_or_else(|| {
                    ToolError::Config(format!("ingest requires data.{what} in the config"))
                })
            };
            let solar_path = need(&cfg.data.solar_csv, "solar_csv")?;
            let weather_path = need(&cfg.data.weather_csv, "weather_csv")?;
            let aqi_path = need(&cfg.data.aqi_csv, "aqi_csv")?;

            let (solar_raw, d1) =
                ingest::parse_csv(&solar_path, &SourceSchema::for_kind(SourceKind::Solar15Min))?;
            let (weather_raw, d2) =
                ingest::parse_csv(&weather_path, &SourceSchema::for_kind(SourceKind::Weather))?;
            let (aqi_raw, d3) =
                ingest::parse_csv(&aqi_path, &SourceSchema::for_kind(SourceKind::AqiDaily))?;
            let solar = ingest::resample_hourly(&solar_raw, cfg.data.generation_agg)?;
            let weather = ingest::resample_hourly(&weather_raw, ingest::GenerationAgg::Mean)?;
            let (merged, md) =
                ingest::merge_sources(&solar, &weather, &aqi_raw, cfg.data.aqi_staleness_hours)?;
            ingest::write_table_csv(&merged, &out)?;
            println!(
                "merged {} hours to {} (skipped rows: solar {}, weather {}, aqi {}; dropped hours: incomplete {}, stale aqi {})",
                merged.len(),
                out.display(),
                d1.malformed_rows,
                d2.malformed_rows,
                d3.malformed_rows,
                md.dropped_incomplete,
                md.dropped_stale_aqi
            );
            for (col, missing) in merged.missing_counts() {
                if missing > 0 {
                    println!("  missing {col}: {missing}");
                }
            }
            Ok(())
        }
        Command::Train { config, model, methodology, horizon, seed, out } => {
            let cfg = load_config(&config.config)?;
            let nm = resolve_model(&cfg, &model)?;
            if methodology == Methodology::ZeroInflated && !nm.spec.is_zero_inflated() {
                eprintln!("note: `{model}` is not a zero-inflated model; fitting it as-is");
            }
            let horizon = horizon
                .or_else(|| cfg.features.horizons.first().copied())
                .ok_or_else(|| ToolError::Config("no horizon configured".into()))?;
            let table = load_merged(&cfg)?;
            let ds = build_dataset(&cfg, &table, horizon)?;
            let (train, _test) = split(&ds, &cfg.split)?;

            let seed = seed.unwrap_or(eval::cell_seed(cfg.benchmark.seed, methodology, &nm.name, horizon));
            let spec = nm.spec.with_seed(seed);

            let (fit_x, fit_y, ft, tt): (
                _,
                _,
                Option<PowerTransformParams>,
                Option<ColumnTransform>,
            ) = if methodology == Methodology::PowerTransform {
                let bc = cfg.benchmark_config();
                let (pt_train, _pt_test, ft, tt) =
                    eval::fit_pt_split(&train, &train, &bc)?;
                (pt_train.x, pt_train.y, ft, tt)
            } else {
                (train.x.clone(), train.y.clone(), None, None)
            };

            let fitted = FittedModel::fit(&spec, &fit_x, &fit_y)?;
            let artifact = ModelArtifact {
                format_version: FORMAT_VERSION,
                model: fitted,
                feature_names: ds.feature_names.clone(),
                feature_transform: ft,
                target_transform: tt,
                horizon_hours: horizon,
                methodology: methodology.as_str().to_string(),
                meta: ArtifactMeta {
                    seed,
                    config_digest: cfg.digest(),
                    train_end: train.timestamps.last().copied(),
                },
            };
            persist::save_artifact(&artifact, &out)?;
            println!(
                "trained {} ({}, {horizon}h) on {} rows; artifact at {}",
                nm.name,
                methodology.as_str(),
                fit_y.len(),
                out.display()
            );
            Ok(())
        }
        Command::Predict { config, model, out } => {
            let cfg = load_config(&config.config)?;
            let artifact = persist::load_artifact(&model)?;
            let table = load_merged(&cfg)?;
            let ds = build_dataset(&cfg, &table, artifact.horizon_hours)?;
            if ds.feature_names != artifact.feature_names {
                return Err(ToolError::Schema(format!(
                    "feature mismatch: artifact expects [{}], data provides [{}]",
                    artifact.feature_names.join(", "),
                    ds.feature_names.join(", ")
                )));
            }
            let x = match &artifact.feature_transform {
                Some(ft) => solarcast::transform::apply(ft, &ds.x)?,
                None => ds.x.clone(),
            };
            let mut preds = artifact.model.predict(&x)?;
            if let Some(tt) = &artifact.target_transform {
                for p in &mut preds {
                    *p = tt.invert(*p).max(0.0);
                }
            }
            let mut csv = String::from("timestamp,prediction\n");
            for (ts, p) in ds.timestamps.iter().zip(&preds) {
                let _ = writeln!(csv, "{},{p}", ts.format("%Y-%m-%d %H:%M:%S"));
            }
            persist::atomic_write(&out, csv.as_bytes())?;
            println!("wrote {} predictions to {}", preds.len(), out.display());
            Ok(())
        }
        Command::Evaluate { config, model } => {
            let cfg = load_config(&config.config)?;
            let artifact = persist::load_artifact(&model)?;
            let table = load_merged(&cfg)?;
            let ds = build_dataset(&cfg, &table, artifact.horizon_hours)?;
            if ds.feature_names != artifact.feature_names {
                return Err(ToolError::Schema("feature mismatch with artifact".into()));
            }
            let (_train, mut test) = split(&ds, &cfg.split)?;
            if let Some(ft) = &artifact.feature_transform {
                test.x = solarcast::transform::apply(ft, &test.x)?;
            }
            if let Some(tt) = &artifact.target_transform {
                test.y = test.y.iter().map(|&v| tt.apply(v)).collect();
            }
            let methodology = parse_methodology(&artifact.methodology)
                .map_err(ToolError::Config)?;
            let reports = eval::evaluate(
                &artifact.model,
                methodology,
                artifact.model.kind_name(),
                &test,
                artifact.target_transform.as_ref(),
            )?;
            println!("scale,r2,mae,rmse");
            for r in &reports {
                println!("{},{},{},{}", r.scale.as_str(), r.r2, r.mae, r.rmse);
            }
            Ok(())
        }
        Command::Benchmark { config, out_dir } => {
            let cfg = load_config(&config.config)?;
            let dir = out_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let table = load_merged(&cfg)?;
            let bc = cfg.benchmark_config();
            let output = eval::benchmark_matrix(&table, &bc)?;
            let csv = eval::reports_to_csv(&output.cells);
            let text = eval::reports_to_text(&output.cells);
            persist::atomic_write(&dir.join("benchmark_report.csv"), csv.as_bytes())?;
            persist::atomic_write(&dir.join("benchmark_report.txt"), text.as_bytes())?;
            eval::emit_plot_data(&table, &output, &dir)?;
            print!("{text}");
            let failures: Vec<_> = output.cells.iter().filter(|c| c.error.is_some()).collect();
            for c in &failures {
                eprintln!(
                    "cell failed: {} {} {}h: {}",
                    c.methodology.as_str(),
                    c.model,
                    c.hours_out,
                    c.error.as_deref().unwrap_or("")
                );
            }
            println!(
                "{} cells ({} failed); reports in {}",
                output.cells.len(),
                failures.len(),
                dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
