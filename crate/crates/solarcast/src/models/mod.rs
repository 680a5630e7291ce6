//! Predictors: linear/ridge regression, CART trees, random forest,
//! first- and second-order gradient boosting (squared and Tweedie loss),
//! the forest+boosting average ensemble, the logistic gate, and the
//! zero-inflated two-part model.

pub mod ensemble;
pub mod forest;
pub mod gbm;
pub mod linear;
pub mod logistic;
pub mod tree;
pub mod tweedie;
pub mod zero_inflated;

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Result, ToolError};
use ensemble::{fit_ensemble, predict_ensemble, AveragingEnsemble};
use forest::{fit_forest, predict_forest, ForestConfig, ForestModel};
use gbm::{fit_gbm, predict_gbm, BoostOrder, BoostedModel, GbmConfig};
use linear::{fit_linear, predict_linear, LinearModel};
use zero_inflated::{fit_zero_inflated, predict_zero_inflated, ZeroInflatedModel};
pub use zero_inflated::{GateKind, PositiveKind};

/// Untrained model description; what a config file names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Linear { l2: f64 },
    GradientBoosting(GbmConfig),
    Xgboost(GbmConfig),
    RandomForest(ForestConfig),
    ForestPlusXgboost { forest: ForestConfig, boosted: GbmConfig },
    ZeroInflated { gate: GateKind, positive: PositiveKind },
}

impl ModelSpec {
    /// Default display name for reports.
    pub fn default_name(&self) -> &'static str {
        match self {
            ModelSpec::Linear { .. } => "linear_regression",
            ModelSpec::GradientBoosting(_) => "gradient_boosting",
            ModelSpec::Xgboost(_) => "xgboost",
            ModelSpec::RandomForest(_) => "random_forest",
            ModelSpec::ForestPlusXgboost { .. } => "random_forest_plus_xgboost",
            ModelSpec::ZeroInflated { .. } => "zero_inflated",
        }
    }

    /// True for specs that require zero-inflated targets.
    pub fn is_zero_inflated(&self) -> bool {
        matches!(self, ModelSpec::ZeroInflated { .. })
    }

    /// Same spec with every internal seed replaced, for per-cell benchmark
    /// seeding.
    pub fn with_seed(&self, seed: u64) -> ModelSpec {
        let mut s = *self;
        match &mut s {
            ModelSpec::Linear { .. } => {}
            ModelSpec::GradientBoosting(c) | ModelSpec::Xgboost(c) => c.seed = seed,
            ModelSpec::RandomForest(c) => c.seed = seed,
            ModelSpec::ForestPlusXgboost { forest, boosted } => {
                forest.seed = seed;
                boosted.seed = seed.wrapping_add(1);
            }
            ModelSpec::ZeroInflated { gate, positive } => {
                if let GateKind::Boosted(c) = gate {
                    c.seed = seed;
                }
                if let PositiveKind::TweedieGbm(c) = positive {
                    c.seed = seed.wrapping_add(1);
                }
            }
        }
        s
    }

    /// Same spec with one named hyperparameter replaced; the grid-search
    /// hook. Unknown names for the model kind are config errors.
    pub fn with_param(&self, name: &str, value: f64) -> Result<ModelSpec> {
        let mut s = *self;
        let ok = match &mut s {
            ModelSpec::Linear { l2 } => match name {
                "l2" => {
                    *l2 = value;
                    true
                }
                _ => false,
            },
            ModelSpec::GradientBoosting(c) | ModelSpec::Xgboost(c) => set_gbm_param(c, name, value),
            ModelSpec::RandomForest(c) => set_forest_param(c, name, value),
            ModelSpec::ForestPlusXgboost { forest, boosted } => {
                set_forest_param(forest, name, value) || set_gbm_param(boosted, name, value)
            }
            ModelSpec::ZeroInflated { positive, .. } => match positive {
                PositiveKind::TweedieGbm(c) => set_gbm_param(c, name, value),
                PositiveKind::LogLinear { l2 } => match name {
                    "l2" => {
                        *l2 = value;
                        true
                    }
                    _ => false,
                },
            },
        };
        if ok {
            Ok(s)
        } else {
            Err(ToolError::Config(format!(
                "model `{}` has no hyperparameter `{name}`",
                self.default_name()
            )))
        }
    }
}

fn set_gbm_param(c: &mut GbmConfig, name: &str, value: f64) -> bool {
    match name {
        "n_stages" => c.n_stages = value as usize,
        "learning_rate" => c.learning_rate = value,
        "max_depth" => c.max_depth = value as usize,
        "min_samples_leaf" => c.min_samples_leaf = value as usize,
        "row_subsample" => c.row_subsample = value,
        "col_subsample" => c.col_subsample = value,
        "l2_leaf" => c.l2_leaf = value,
        _ => return false,
    }
    true
}

fn set_forest_param(c: &mut ForestConfig, name: &str, value: f64) -> bool {
    match name {
        "n_trees" => c.n_trees = value as usize,
        "max_depth" => c.max_depth = value as usize,
        "min_samples_leaf" => c.min_samples_leaf = value as usize,
        "feature_fraction" => c.feature_fraction = value,
        _ => return false,
    }
    true
}

/// Any trained predictor, ready for prediction or persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Linear(LinearModel),
    Boosted(BoostedModel),
    Forest(ForestModel),
    Ensemble(AveragingEnsemble),
    ZeroInflated(ZeroInflatedModel),
}

impl FittedModel {
    pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[f64]) -> Result<FittedModel> {
        Ok(match spec {
            ModelSpec::Linear { l2 } => FittedModel::Linear(fit_linear(x, y, *l2)?),
            ModelSpec::GradientBoosting(c) => {
                let c = GbmConfig { order: BoostOrder::First, ..*c };
                FittedModel::Boosted(fit_gbm(x, y, &c)?)
            }
            ModelSpec::Xgboost(c) => {
                let c = GbmConfig { order: BoostOrder::Second, ..*c };
                FittedModel::Boosted(fit_gbm(x, y, &c)?)
            }
            ModelSpec::RandomForest(c) => FittedModel::Forest(fit_forest(x, y, c)),
            ModelSpec::ForestPlusXgboost { forest, boosted } => {
                let f = fit_forest(x, y, forest);
                let b = fit_gbm(x, y, &GbmConfig { order: BoostOrder::Second, ..*boosted })?;
                FittedModel::Ensemble(fit_ensemble(f, b, [0.5, 0.5])?)
            }
            ModelSpec::ZeroInflated { gate, positive } => {
                FittedModel::ZeroInflated(fit_zero_inflated(x, y, *gate, *positive)?)
            }
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            FittedModel::Linear(m) => predict_linear(m, x),
            FittedModel::Boosted(m) => predict_gbm(m, x),
            FittedModel::Forest(m) => Ok(predict_forest(m, x)),
            FittedModel::Ensemble(m) => predict_ensemble(m, x),
            FittedModel::ZeroInflated(m) => predict_zero_inflated(m, x),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FittedModel::Linear(_) => "linear",
            FittedModel::Boosted(_) => "boosted",
            FittedModel::Forest(_) => "forest",
            FittedModel::Ensemble(_) => "ensemble",
            FittedModel::ZeroInflated(_) => "zero_inflated",
        }
    }
}
