//! TOML run configuration: data paths, feature construction, split and CV
//! rules, model rosters, and output locations. Every section has full
//! defaults, so an empty file is a valid config; unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ToolError};
use crate::eval::{BenchmarkConfig, NamedModel};
use crate::features::{FoldPlan, SplitSpec};
use crate::ingest::GenerationAgg;
use crate::models::gbm::{GbmConfig, Loss};
use crate::models::{GateKind, ModelSpec, PositiveKind};
use crate::synth::SynthParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub solar_csv: Option<PathBuf>,
    pub weather_csv: Option<PathBuf>,
    pub aqi_csv: Option<PathBuf>,
    /// Merged hourly table; output of `ingest`, input of everything else.
    pub merged_csv: PathBuf,
    pub aqi_staleness_hours: i64,
    pub generation_agg: GenerationAgg,
    /// Upper plausibility bound for hourly generation; exceedances warn.
    pub generation_max: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            solar_csv: None,
            weather_csv: None,
            aqi_csv: None,
            merged_csv: PathBuf::from("merged.csv"),
            aqi_staleness_hours: crate::ingest::DEFAULT_AQI_STALENESS_HOURS,
            generation_agg: GenerationAgg::Sum,
            generation_max: crate::data::DEFAULT_GENERATION_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub horizons: Vec<u32>,
    /// Autoregressive generation lags, hours.
    pub lags: Vec<u32>,
    pub calendar: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            horizons: vec![24, 48, 72],
            lags: vec![24],
            calendar: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformConfig {
    pub features: bool,
    pub target: bool,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { features: true, target: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub seed: u64,
    /// Also report raw-scale metrics for power-transform cells.
    pub dual_scale_reports: bool,
    /// Empty lists mean the built-in roster for that methodology.
    pub regular_models: Vec<NamedModel>,
    pub zero_inflated_models: Vec<NamedModel>,
    pub power_transform_models: Vec<NamedModel>,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        BenchmarkSection {
            seed: 42,
            dual_scale_reports: false,
            regular_models: Vec::new(),
            zero_inflated_models: Vec::new(),
            power_transform_models: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub seed: u64,
    pub n_days: usize,
    pub params: SynthParams,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { seed: 42, n_days: 730, params: SynthParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub features: FeatureConfig,
    pub split: SplitSpec,
    pub cv: FoldPlan,
    pub transform: TransformConfig,
    pub benchmark: BenchmarkSection,
    pub synth: SynthSection,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
            .map_err(|e| ToolError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<RunConfig, toml::de::Error> {
        toml::from_str(text)
    }

    /// Content digest of the parsed config. Computed from the canonical
    /// serialized form, so formatting and key order in the file do not
    /// change it, but any effective value does.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Assembles the benchmark matrix config, substituting the built-in
    /// rosters where a model list is empty.
    pub fn benchmark_config(&self) -> BenchmarkConfig {
        let pick = |given: &Vec<NamedModel>, fallback: fn() -> Vec<NamedModel>| {
            if given.is_empty() { fallback() } else { given.clone() }
        };
        BenchmarkConfig {
            horizons: self.features.horizons.clone(),
            lags: self.features.lags.clone(),
            split: self.split,
            seed: self.benchmark.seed,
            regular_models: pick(&self.benchmark.regular_models, regular_roster),
            zero_inflated_models: pick(&self.benchmark.zero_inflated_models, zero_inflated_roster),
            power_transform_models: pick(&self.benchmark.power_transform_models, regular_roster),
            dual_scale_reports: self.benchmark.dual_scale_reports,
            transform_features: self.transform.features,
            transform_target: self.transform.target,
        }
    }
}

fn named(spec: ModelSpec) -> NamedModel {
    NamedModel { name: spec.default_name().to_string(), spec }
}

/// The five standard regressors, also used for the power-transform
/// methodology.
pub fn regular_roster() -> Vec<NamedModel> {
    vec![
        named(ModelSpec::Linear { l2: 0.0 }),
        named(ModelSpec::GradientBoosting(GbmConfig::default())),
        named(ModelSpec::Xgboost(GbmConfig::default())),
        named(ModelSpec::RandomForest(Default::default())),
        named(ModelSpec::ForestPlusXgboost {
            forest: Default::default(),
            boosted: GbmConfig::default(),
        }),
    ]
}

/// The four zero-inflated variants: {logistic, boosted} gates crossed with
/// {Tweedie GBM, log-linear} positive parts.
pub fn zero_inflated_roster() -> Vec<NamedModel> {
    let tweedie = GbmConfig { loss: Loss::Tweedie { power: 1.5 }, ..Default::default() };
    let gate_gbm = GbmConfig::default();
    vec![
        NamedModel {
            name: "zi_logistic_tweedie".into(),
            spec: ModelSpec::ZeroInflated {
                gate: GateKind::Logistic,
                positive: PositiveKind::TweedieGbm(tweedie),
            },
        },
        NamedModel {
            name: "zi_logistic_loglinear".into(),
            spec: ModelSpec::ZeroInflated {
                gate: GateKind::Logistic,
                positive: PositiveKind::LogLinear { l2: 1e-6 },
            },
        },
        NamedModel {
            name: "zi_boosted_tweedie".into(),
            spec: ModelSpec::ZeroInflated {
                gate: GateKind::Boosted(gate_gbm),
                positive: PositiveKind::TweedieGbm(tweedie),
            },
        },
        NamedModel {
            name: "zi_boosted_loglinear".into(),
            spec: ModelSpec::ZeroInflated {
                gate: GateKind::Boosted(gate_gbm),
                positive: PositiveKind::LogLinear { l2: 1e-6 },
            },
        },
    ]
}
