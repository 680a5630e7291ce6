//! Weighted prediction average of a random forest and a boosted model; the
//! "RF + XGB" row of the benchmark.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Result, ToolError};
use crate::models::forest::{predict_forest, ForestModel};
use crate::models::gbm::{predict_gbm, BoostedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingEnsemble {
    pub forest: ForestModel,
    pub boosted: BoostedModel,
    /// Non-negative, summing to 1; default (0.5, 0.5).
    pub weights: [f64; 2],
}

pub fn fit_ensemble(
    forest: ForestModel,
    boosted: BoostedModel,
    weights: [f64; 2],
) -> Result<AveragingEnsemble> {
    if weights.iter().any(|&w| w < 0.0) || (weights[0] + weights[1] - 1.0).abs() > 1e-9 {
        return Err(ToolError::Config(format!(
            "ensemble weights must be non-negative and sum to 1, got {weights:?}"
        )));
    }
    Ok(AveragingEnsemble {
        forest,
        boosted,
        weights,
    })
}

pub fn predict_ensemble(m: &AveragingEnsemble, x: &Matrix) -> Result<Vec<f64>> {
    let a = predict_forest(&m.forest, x);
    let b = predict_gbm(&m.boosted, x)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(fa, fb)| m.weights[0] * fa + m.weights[1] * fb)
        .collect())
}
