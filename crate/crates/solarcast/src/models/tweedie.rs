//! Tweedie unit deviance and the gradient/hessian statistics used by
//! boosting under a log link.
//!
//! For power p in (1,2) the Tweedie family is compound Poisson-gamma with a
//! point mass at zero, which is exactly the shape of hourly solar output.
//! Fitting uses the unit deviance; the density's normalizing constant is
//! never needed for point prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ToolError};

/// Tweedie family spec: power p strictly inside (1,2), scalar dispersion
/// estimated after fitting, mean linked through log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TweedieSpec {
    pub power: f64,
    /// Estimated post-fit from mean deviance; reported, never used in point
    /// prediction.
    pub dispersion: Option<f64>,
}

impl TweedieSpec {
    pub fn new(power: f64) -> Result<Self> {
        if !(1.0 < power && power < 2.0) {
            return Err(ToolError::Config(format!(
                "tweedie power must lie strictly inside (1,2), got {power}"
            )));
        }
        Ok(TweedieSpec {
            power,
            dispersion: None,
        })
    }
}

impl Default for TweedieSpec {
    fn default() -> Self {
        TweedieSpec {
            power: 1.5,
            dispersion: None,
        }
    }
}

/// Unit deviance for y >= 0, mu > 0, 1 < p < 2:
/// d = 2 * [ y^(2-p)/((1-p)(2-p)) - y*mu^(1-p)/(1-p) + mu^(2-p)/(2-p) ].
///
/// Non-negative, zero iff y == mu.
pub fn tweedie_deviance(y: f64, mu: f64, p: f64) -> Result<f64> {
    if mu <= 0.0 || !mu.is_finite() {
        return Err(ToolError::NonFinite(format!("tweedie mean must be positive, got {mu}")));
    }
    let a = if y > 0.0 {
        y.powf(2.0 - p) / ((1.0 - p) * (2.0 - p))
    } else {
        0.0
    };
    let b = y * mu.powf(1.0 - p) / (1.0 - p);
    let c = mu.powf(2.0 - p) / (2.0 - p);
    Ok(2.0 * (a - b + c).max(0.0))
}

/// Half unit deviance as a function of the raw score f (mu = exp(f)); the
/// per-sample objective the boosting stages descend.
pub fn tweedie_loss(y: f64, f: f64, p: f64) -> f64 {
    let a = if y > 0.0 {
        y.powf(2.0 - p) / ((1.0 - p) * (2.0 - p))
    } else {
        0.0
    };
    a - y * ((1.0 - p) * f).exp() / (1.0 - p) + ((2.0 - p) * f).exp() / (2.0 - p)
}

/// Gradient and hessian of [`tweedie_loss`] with respect to the raw score:
/// g = -y e^((1-p)f) + e^((2-p)f), h = -(1-p) y e^((1-p)f) + (2-p) e^((2-p)f).
pub fn tweedie_grad_hess(y: f64, f: f64, p: f64) -> (f64, f64) {
    let e1 = ((1.0 - p) * f).exp();
    let e2 = ((2.0 - p) * f).exp();
    let g = -y * e1 + e2;
    let h = -(1.0 - p) * y * e1 + (2.0 - p) * e2;
    (g, h)
}

/// Scalar dispersion estimate phi = sum(d_i) / (n - dof).
pub fn estimate_dispersion(y: &[f64], mu: &[f64], p: f64, dof: usize) -> Result<f64> {
    assert_eq!(y.len(), mu.len());
    let mut total = 0.0;
    for (&yi, &mi) in y.iter().zip(mu) {
        total += tweedie_deviance(yi, mi, p)?;
    }
    let denom = y.len().saturating_sub(dof).max(1) as f64;
    Ok(total / denom)
}
