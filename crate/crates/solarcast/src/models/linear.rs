//! Ordinary and ridge linear regression solved by singular value
//! decomposition, with the intercept left unpenalized.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Result, ToolError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub l2: f64,
}

const RANK_EPS: f64 = 1e-10;

/// Minimizes ||y - b0 - X b||^2 + l2 ||b||^2 (intercept unpenalized).
pub fn fit_linear(x: &Matrix, y: &[f64], l2: f64) -> Result<LinearModel> {
    let n = x.n_rows();
    let d = x.n_cols();
    assert_eq!(n, y.len());
    if n <= d {
        return Err(ToolError::Config(format!(
            "need more rows ({n}) than features ({d}) to fit a linear model"
        )));
    }
    if l2 < 0.0 {
        return Err(ToolError::Config(format!("l2 must be non-negative, got {l2}")));
    }

    // Design [1 X], with sqrt(l2) ridge rows appended for the non-intercept
    // columns when regularized.
    let extra = if l2 > 0.0 { d } else { 0 };
    let mut a = DMatrix::<f64>::zeros(n + extra, d + 1);
    let mut b = DVector::<f64>::zeros(n + extra);
    for i in 0..n {
        a[(i, 0)] = 1.0;
        for j in 0..d {
            a[(i, j + 1)] = x.get(i, j);
        }
        b[i] = y[i];
    }
    if l2 > 0.0 {
        let s = l2.sqrt();
        for j in 0..d {
            a[(n + j, j + 1)] = s;
        }
    }

    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if l2 == 0.0 && (smax == 0.0 || smin < RANK_EPS * smax) {
        return Err(ToolError::SingularMatrix(
            "design matrix is rank-deficient and l2 = 0".into(),
        ));
    }
    let beta = svd
        .solve(&b, RANK_EPS * smax.max(1.0))
        .map_err(|e| ToolError::SingularMatrix(e.to_string()))?;

    let coefficients: Vec<f64> = (0..d).map(|j| beta[j + 1]).collect();
    if !beta[0].is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
        return Err(ToolError::NonFinite("linear fit produced non-finite coefficients".into()));
    }
    Ok(LinearModel {
        intercept: beta[0],
        coefficients,
        l2,
    })
}

pub fn predict_linear(m: &LinearModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.n_cols() != m.coefficients.len() {
        return Err(ToolError::Schema(format!(
            "model has {} coefficients but input has {} features",
            m.coefficients.len(),
            x.n_cols()
        )));
    }
    let out: Vec<f64> = x
        .rows()
        .map(|r| m.intercept + r.iter().zip(&m.coefficients).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(ToolError::NonFinite("linear prediction overflowed".into()));
    }
    Ok(out)
}
