//! Logistic regression by iteratively reweighted least squares; the gate of
//! the zero-inflated model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Result, ToolError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// False when IRLS hit the iteration cap (e.g. perfect separation); the
    /// last iterate is still returned and usable.
    pub converged: bool,
}

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-8;

fn sigmoid(v: f64) -> f64 {
    let p = 1.0 / (1.0 + (-v).exp());
    p.clamp(1e-12, 1.0 - 1e-12)
}

/// Maximizes the Bernoulli log-likelihood of z in {0,1} given X.
pub fn fit_logistic(x: &Matrix, z: &[f64]) -> Result<LogisticModel> {
    let n = x.n_rows();
    let d = x.n_cols();
    assert_eq!(n, z.len());
    let ones = z.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(ToolError::Config(
            "logistic fit needs both classes present".into(),
        ));
    }

    let mut a = DMatrix::<f64>::zeros(n, d + 1);
    for i in 0..n {
        a[(i, 0)] = 1.0;
        for j in 0..d {
            a[(i, j + 1)] = x.get(i, j);
        }
    }

    let mut beta = DVector::<f64>::zeros(d + 1);
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let eta = &a * &beta;
        let pi: DVector<f64> = eta.map(sigmoid);
        let w: DVector<f64> = pi.map(|p| (p * (1.0 - p)).max(1e-10));
        // Working response: eta + (z - pi) / w.
        let mut zz = DVector::<f64>::zeros(n);
        for i in 0..n {
            zz[i] = eta[i] + (z[i] - pi[i]) / w[i];
        }
        // Solve (A^T W A) beta = A^T W z with a small ridge for stability.
        let mut aw = a.clone();
        for i in 0..n {
            let s = w[i].sqrt();
            for j in 0..=d {
                aw[(i, j)] *= s;
            }
        }
        let zw: DVector<f64> = DVector::from_iterator(n, (0..n).map(|i| zz[i] * w[i].sqrt()));
        let mut ata = aw.transpose() * &aw;
        for j in 0..=d {
            ata[(j, j)] += 1e-10;
        }
        let atb = aw.transpose() * zw;
        let next = ata
            .cholesky()
            .map(|c| c.solve(&atb))
            .ok_or_else(|| ToolError::SingularMatrix("IRLS normal equations not SPD".into()))?;
        let delta = (&next - &beta).amax();
        beta = next;
        if !beta.iter().all(|v| v.is_finite()) {
            return Err(ToolError::NonFinite("IRLS produced non-finite coefficients".into()));
        }
        if delta < TOL {
            converged = true;
            break;
        }
    }

    Ok(LogisticModel {
        intercept: beta[0],
        coefficients: (0..d).map(|j| beta[j + 1]).collect(),
        converged,
    })
}

/// Predicted probabilities, always strictly inside (0,1).
pub fn predict_logistic(m: &LogisticModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.n_cols() != m.coefficients.len() {
        return Err(ToolError::Schema(format!(
            "model has {} coefficients but input has {} features",
            m.coefficients.len(),
            x.n_cols()
        )));
    }
    Ok(x.rows()
        .map(|r| {
            sigmoid(m.intercept + r.iter().zip(&m.coefficients).map(|(a, b)| a * b).sum::<f64>())
        })
        .collect())
}
