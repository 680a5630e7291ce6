//! Zero-inflated (hurdle) model: a gate predicting the probability of a
//! zero, a positive-part model fit on the nonzero rows only, and the
//! expectation rule E[Y] = (1 - pi) * mu.
//!
//! The hurdle decomposition keeps fitting deterministic: the gate sees all
//! rows with z = 1{y = 0}, the positive model sees only y > 0.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Result, ToolError};
use crate::models::gbm::{fit_gbm, predict_gbm, BoostedModel, GbmConfig, Loss};
use crate::models::linear::{fit_linear, predict_linear, LinearModel};
use crate::models::logistic::{fit_logistic, predict_logistic, LogisticModel};
use crate::models::tweedie::estimate_dispersion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Logistic(LogisticModel),
    /// Squared-loss boosting on the zero indicator, clamped into [0,1].
    Boosted(BoostedModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivePart {
    TweedieGbm(BoostedModel),
    /// Linear model on ln(y); predicts exp of the fitted value.
    LogLinear(LinearModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Logistic,
    Boosted(GbmConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveKind {
    TweedieGbm(GbmConfig),
    LogLinear { l2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroInflatedModel {
    pub gate: Gate,
    pub positive: PositivePart,
    /// Scalar Tweedie dispersion estimated on the positive part, when the
    /// positive model is a Tweedie GBM. Diagnostic only.
    pub dispersion: Option<f64>,
}

pub fn fit_zero_inflated(
    x: &Matrix,
    y: &[f64],
    gate_kind: GateKind,
    positive_kind: PositiveKind,
) -> Result<ZeroInflatedModel> {
    assert_eq!(x.n_rows(), y.len());
    if y.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(ToolError::Config("zero-inflated targets must be finite and >= 0".into()));
    }
    let zeros: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0.0).collect();
    let positives: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    if zeros.is_empty() || positives.is_empty() {
        return Err(ToolError::Config(format!(
            "zero-inflated fit needs both zeros and positives ({} zeros, {} positives)",
            zeros.len(),
            positives.len()
        )));
    }

    let z: Vec<f64> = y.iter().map(|&v| if v == 0.0 { 1.0 } else { 0.0 }).collect();
    let gate = match gate_kind {
        GateKind::Logistic => Gate::Logistic(fit_logistic(x, &z)?),
        GateKind::Boosted(cfg) => Gate::Boosted(fit_gbm(x, &z, &cfg)?),
    };

    let px = x.select_rows(&positives);
    let py: Vec<f64> = positives.iter().map(|&i| y[i]).collect();
    let (positive, dispersion) = match positive_kind {
        PositiveKind::TweedieGbm(cfg) => {
            let cfg = match cfg.loss {
                Loss::Tweedie { .. } => cfg,
                Loss::Squared => GbmConfig { loss: Loss::Tweedie { power: 1.5 }, ..cfg },
            };
            let m = fit_gbm(&px, &py, &cfg)?;
            let mu = predict_gbm(&m, &px)?;
            let power = match cfg.loss {
                Loss::Tweedie { power } => power,
                Loss::Squared => unreachable!(),
            };
            let phi = estimate_dispersion(&py, &mu, power, m.stages.len() + 1)?;
            (PositivePart::TweedieGbm(m), Some(phi))
        }
        PositiveKind::LogLinear { l2 } => {
            let logs: Vec<f64> = py.iter().map(|v| v.ln()).collect();
            (PositivePart::LogLinear(fit_linear(&px, &logs, l2)?), None)
        }
    };

    Ok(ZeroInflatedModel {
        gate,
        positive,
        dispersion,
    })
}

/// Probability of a zero, per row.
pub fn predict_gate(m: &ZeroInflatedModel, x: &Matrix) -> Result<Vec<f64>> {
    match &m.gate {
        Gate::Logistic(g) => predict_logistic(g, x),
        Gate::Boosted(g) => Ok(predict_gbm(g, x)?.iter().map(|p| p.clamp(0.0, 1.0)).collect()),
    }
}

/// Conditional positive mean mu(x), per row.
pub fn predict_positive(m: &ZeroInflatedModel, x: &Matrix) -> Result<Vec<f64>> {
    match &m.positive {
        PositivePart::TweedieGbm(g) => predict_gbm(g, x),
        PositivePart::LogLinear(g) => Ok(predict_linear(g, x)?.iter().map(|v| v.exp()).collect()),
    }
}

/// Expected value E[Y] = (1 - pi) * mu, never negative.
pub fn predict_zero_inflated(m: &ZeroInflatedModel, x: &Matrix) -> Result<Vec<f64>> {
    let pi = predict_gate(m, x)?;
    let mu = predict_positive(m, x)?;
    let out: Vec<f64> = pi.iter().zip(&mu).map(|(p, m)| ((1.0 - p) * m).max(0.0)).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(ToolError::NonFinite("zero-inflated prediction overflowed".into()));
    }
    Ok(out)
}
