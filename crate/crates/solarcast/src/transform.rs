//! Yeo-Johnson power transform: per-column lambda estimation by maximum
//! likelihood, forward/inverse application, and post-transform
//! standardization.
//!
//! Lambda is fit on the training partition only and reused verbatim for
//! test data; refitting on test would leak target statistics.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Result, ToolError};

/// Lambdas within this distance of the singular values 0 and 2 route to the
/// log branches for numerical continuity.
const LAMBDA_EPS: f64 = 1e-8;

/// Search interval for the MLE; boundary hits are reported as diagnostics.
pub const LAMBDA_MIN: f64 = -5.0;
pub const LAMBDA_MAX: f64 = 5.0;

/// Yeo-Johnson forward map. Defined for all real x; strictly increasing in x
/// for any fixed lambda.
pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    if x >= 0.0 {
        if lambda.abs() < LAMBDA_EPS {
            (x + 1.0).ln()
        } else {
            ((x + 1.0).powf(lambda) - 1.0) / lambda
        }
    } else if (lambda - 2.0).abs() < LAMBDA_EPS {
        -((-x + 1.0).ln())
    } else {
        -(((-x + 1.0).powf(2.0 - lambda) - 1.0) / (2.0 - lambda))
    }
}

/// Inverse of [`yeo_johnson`]. Returns NaN when `y` lies outside the image
/// of the forward map for this lambda.
pub fn yeo_johnson_inverse(y: f64, lambda: f64) -> f64 {
    if y >= 0.0 {
        if lambda.abs() < LAMBDA_EPS {
            y.exp() - 1.0
        } else {
            let base = y * lambda + 1.0;
            if base <= 0.0 {
                f64::NAN
            } else {
                base.powf(1.0 / lambda) - 1.0
            }
        }
    } else if (lambda - 2.0).abs() < LAMBDA_EPS {
        1.0 - (-y).exp()
    } else {
        let base = -(2.0 - lambda) * y + 1.0;
        if base <= 0.0 {
            f64::NAN
        } else {
            1.0 - base.powf(1.0 / (2.0 - lambda))
        }
    }
}

/// Profile log-likelihood of lambda for one column, up to an additive
/// constant: -(n/2) ln sigma^2(lambda) + (lambda-1) * sum sign(x) ln(|x|+1).
pub fn profile_log_likelihood(column: &[f64], lambda: f64) -> f64 {
    let n = column.len() as f64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for &x in column {
        let z = yeo_johnson(x, lambda);
        sum += z;
        sumsq += z * z;
    }
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    if var <= 0.0 || !var.is_finite() {
        return f64::NEG_INFINITY;
    }
    let jacobian: f64 = column.iter().map(|&x| x.signum() * (x.abs() + 1.0).ln()).sum();
    -(n / 2.0) * var.ln() + (lambda - 1.0) * jacobian
}

/// Maximum-likelihood lambda for one column: coarse grid over [-5,5] at
/// step 0.1, then golden-section refinement to 1e-6.
pub fn fit_lambda(column: &[f64]) -> Result<f64> {
    let finite: Vec<f64> = column.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 3 {
        return Err(ToolError::Convergence(format!(
            "need at least 3 finite values to fit lambda, got {}",
            finite.len()
        )));
    }
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    if finite.iter().all(|v| (v - mean).abs() < 1e-12) {
        return Err(ToolError::Convergence("column has zero variance".into()));
    }

    let steps = ((LAMBDA_MAX - LAMBDA_MIN) / 0.1).round() as usize;
    let mut best = (f64::NEG_INFINITY, LAMBDA_MIN);
    for i in 0..=steps {
        let lam = LAMBDA_MIN + 0.1 * i as f64;
        let ll = profile_log_likelihood(&finite, lam);
        if ll > best.0 {
            best = (ll, lam);
        }
    }
    if !best.0.is_finite() {
        return Err(ToolError::Convergence("flat likelihood over the search grid".into()));
    }
    let lo = (best.1 - 0.1).max(LAMBDA_MIN);
    let hi = (best.1 + 0.1).min(LAMBDA_MAX);
    Ok(golden_section_max(|lam| profile_log_likelihood(&finite, lam), lo, hi, 1e-6))
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    (lo + hi) / 2.0
}

/// Fitted transform for one column: lambda plus the post-transform
/// standardization constants (train-set mean and sd).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnTransform {
    pub name: String,
    pub lambda: f64,
    pub mean: f64,
    pub sd: f64,
    /// Log-likelihood at the fitted lambda; NaN for passthrough columns.
    pub log_likelihood: f64,
    /// True when the column had (near-)zero variance and is passed through
    /// with lambda = 1 and sd = 1.
    pub passthrough: bool,
}

impl ColumnTransform {
    pub fn apply(&self, x: f64) -> f64 {
        (yeo_johnson(x, self.lambda) - self.mean) / self.sd
    }

    pub fn invert(&self, z: f64) -> f64 {
        yeo_johnson_inverse(z * self.sd + self.mean, self.lambda)
    }
}

/// Per-column transform parameters for a whole feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTransformParams {
    pub columns: Vec<ColumnTransform>,
}

/// Fits one column end to end: lambda by MLE, then standardization
/// constants on the transformed values. Zero-variance columns become
/// passthroughs instead of hard errors so static metadata columns do not
/// abort a whole benchmark.
pub fn fit_column(name: &str, column: &[f64]) -> Result<ColumnTransform> {
    match fit_lambda(column) {
        Ok(lambda) => {
            let n = column.len() as f64;
            let transformed: Vec<f64> = column.iter().map(|&x| yeo_johnson(x, lambda)).collect();
            if transformed.iter().any(|v| !v.is_finite()) {
                return Err(ToolError::NonFinite(format!(
                    "column `{name}` overflows under lambda {lambda}"
                )));
            }
            let mean = transformed.iter().sum::<f64>() / n;
            let var = transformed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd <= 0.0 {
                return Err(ToolError::Convergence(format!(
                    "column `{name}` is constant after transform"
                )));
            }
            Ok(ColumnTransform {
                name: name.to_string(),
                lambda,
                mean,
                sd,
                log_likelihood: profile_log_likelihood(column, lambda),
                passthrough: false,
            })
        }
        Err(ToolError::Convergence(_)) => {
            let mean = if column.is_empty() {
                0.0
            } else {
                column.iter().sum::<f64>() / column.len() as f64
            };
            Ok(ColumnTransform {
                name: name.to_string(),
                lambda: 1.0,
                mean: yeo_johnson(mean, 1.0),
                sd: 1.0,
                log_likelihood: f64::NAN,
                passthrough: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Fits every column of a matrix independently.
pub fn fit_transformer(x: &Matrix, names: &[String]) -> Result<PowerTransformParams> {
    assert_eq!(names.len(), x.n_cols());
    let mut columns = Vec::with_capacity(x.n_cols());
    for (j, name) in names.iter().enumerate() {
        columns.push(fit_column(name, &x.column(j))?);
    }
    Ok(PowerTransformParams { columns })
}

/// Applies a fitted transform column-wise; errors on overflow.
pub fn apply(params: &PowerTransformParams, x: &Matrix) -> Result<Matrix> {
    assert_eq!(params.columns.len(), x.n_cols());
    let mut out = Matrix::zeros(x.n_rows(), x.n_cols());
    for i in 0..x.n_rows() {
        for (j, ct) in params.columns.iter().enumerate() {
            let v = ct.apply(x.get(i, j));
            if !v.is_finite() {
                return Err(ToolError::NonFinite(format!(
                    "transform of column `{}` row {i} overflowed",
                    ct.name
                )));
            }
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Inverts a fitted transform column-wise; errors when a value falls outside
/// the forward map's image.
pub fn invert(params: &PowerTransformParams, z: &Matrix) -> Result<Matrix> {
    assert_eq!(params.columns.len(), z.n_cols());
    let mut out = Matrix::zeros(z.n_rows(), z.n_cols());
    for i in 0..z.n_rows() {
        for (j, ct) in params.columns.iter().enumerate() {
            let v = ct.invert(z.get(i, j));
            if !v.is_finite() {
                return Err(ToolError::NonFinite(format!(
                    "inverse transform of column `{}` row {i} left the domain",
                    ct.name
                )));
            }
            out.set(i, j, v);
        }
    }
    Ok(out)
}
