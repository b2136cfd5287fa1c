//! Gaussian (OLS) and binomial (logit, IRLS) generalized linear models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::{DesignMatrix, Result, StatsError};

/// Convergence threshold on the absolute change in deviance.
pub const IRLS_TOLERANCE: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;

/// Coefficient magnitude beyond which a logit fit is treated as separated.
const SEPARATION_BETA: f64 = 20.0;

/// Floor on IRLS working weights so the weighted normal equations stay
/// solvable when fitted probabilities saturate.
const MIN_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Residual sum of squares for OLS, binomial deviance for logit.
    pub deviance: f64,
    pub df_residual: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Set when a logit fit diverged under (quasi-)complete separation.
    pub separation: bool,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }
}

fn check_shape(x: &DesignMatrix, n_y: usize) -> Result<()> {
    if x.nrows() != n_y {
        return Err(StatsError::ShapeMismatch(format!(
            "{} design rows for {} responses",
            x.nrows(),
            n_y
        )));
    }
    if x.nrows() <= x.ncols() {
        return Err(StatsError::InvalidInput(format!(
            "need more rows than columns ({} <= {})",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Inverse of a symmetric positive-definite matrix, or a singular-design error.
fn spd_inverse(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > max * 1e-12).count();
    if rank < p || max == 0.0 {
        return Err(StatsError::SingularDesign { rank, columns: p });
    }
    m.cholesky()
        .map(|c| c.inverse())
        .ok_or(StatsError::SingularDesign { rank, columns: p })
}

/// Two-sided p-value for a coefficient/standard-error pair.
fn two_sided_p(beta: f64, se: f64, sf: impl Fn(f64) -> f64) -> f64 {
    if se > 0.0 {
        (2.0 * sf((beta / se).abs())).clamp(0.0, 1.0)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Ordinary least squares with Student-t inference on each coefficient.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    check_shape(x, y.len())?;
    let rank = x.rank();
    if rank < x.ncols() {
        return Err(StatsError::SingularDesign {
            rank,
            columns: x.ncols(),
        });
    }
    let n = x.nrows();
    let p = x.ncols();
    let xm = &x.data;
    let yv = DVector::from_column_slice(y);

    // QR keeps the exact-fit examples exact to rounding.
    let qr = xm.clone().qr();
    let qty = qr.q().transpose() * &yv;
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or(StatsError::SingularDesign { rank, columns: p })?;

    let resid = &yv - xm * &beta;
    let rss = resid.norm_squared();
    let df = n - p;
    let sigma2 = rss / df as f64;
    let xtx_inv = spd_inverse(xm.transpose() * xm)?;
    let std_errors: Vec<f64> = (0..p).map(|j| (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt()).collect();
    let t = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
    let p_values = beta
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| two_sided_p(b, se, |v| t.sf(v)))
        .collect();

    Ok(FitResult {
        names: x.names.clone(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        p_values,
        deviance: rss,
        df_residual: df,
        converged: true,
        iterations: 1,
        separation: false,
    })
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Binomial deviance, with the `0·ln 0 = 0` convention.
fn binomial_deviance(y: &[f64], mu: &[f64]) -> f64 {
    let ll: f64 = y
        .iter()
        .zip(mu)
        .map(|(&yi, &mi)| {
            let a = if yi > 0.0 { yi * mi.ln() } else { 0.0 };
            let b = if yi < 1.0 { (1.0 - yi) * (1.0 - mi).ln() } else { 0.0 };
            a + b
        })
        .sum();
    -2.0 * ll
}

/// Logistic regression by iteratively reweighted least squares, with Wald
/// standard errors and normal-theory p-values.
///
/// Stops once the deviance changes by less than [`IRLS_TOLERANCE`] or after
/// [`IRLS_MAX_ITER`] iterations. A fit whose largest coefficient exceeds 20
/// in magnitude is flagged as separated and reported as not converged.
pub fn logistic_irls(x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    check_shape(x, y.len())?;
    if let Some(bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(StatsError::InvalidInput(format!("response {bad} is not 0/1")));
    }
    let rank = x.rank();
    if rank < x.ncols() {
        return Err(StatsError::SingularDesign {
            rank,
            columns: x.ncols(),
        });
    }
    let n = x.nrows();
    let p = x.ncols();
    let xm = &x.data;

    let mut beta = DVector::<f64>::zeros(p);
    let mut mu = vec![0.5; n];
    let mut deviance = binomial_deviance(y, &mu);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < IRLS_MAX_ITER {
        iterations += 1;
        let eta = xm * &beta;
        let w: Vec<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(MIN_WEIGHT)).collect();
        let z: Vec<f64> = (0..n).map(|i| eta[i] + (y[i] - mu[i]) / w[i]).collect();

        let mut xtwx = DMatrix::<f64>::zeros(p, p);
        let mut xtwz = DVector::<f64>::zeros(p);
        for i in 0..n {
            let row = xm.row(i);
            for a in 0..p {
                let wa = w[i] * row[a];
                xtwz[a] += wa * z[i];
                for b in 0..p {
                    xtwx[(a, b)] += wa * row[b];
                }
            }
        }
        let next = match xtwx.clone().cholesky() {
            Some(c) => c.solve(&xtwz),
            None => match xtwx.lu().solve(&xtwz) {
                Some(b) => b,
                None => break,
            },
        };
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        beta = next;
        let eta = xm * &beta;
        mu = eta.iter().map(|&e| sigmoid(e)).collect();
        let new_dev = binomial_deviance(y, &mu);
        let delta = (new_dev - deviance).abs();
        deviance = new_dev;
        if delta < IRLS_TOLERANCE {
            converged = true;
            break;
        }
    }

    let separation = beta.iter().any(|b| b.abs() > SEPARATION_BETA);
    if separation {
        converged = false;
    }

    let mut info = DMatrix::<f64>::zeros(p, p);
    for i in 0..n {
        let row = xm.row(i);
        let wi = mu[i] * (1.0 - mu[i]);
        for a in 0..p {
            for b in 0..p {
                info[(a, b)] += wi * row[a] * row[b];
            }
        }
    }
    let std_errors: Vec<f64> = match spd_inverse(info) {
        Ok(cov) => (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect(),
        Err(_) => vec![f64::INFINITY; p],
    };
    let normal = Normal::standard();
    let p_values = beta
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| {
            if se.is_finite() {
                two_sided_p(b, se, |v| normal.sf(v))
            } else {
                1.0
            }
        })
        .collect();

    Ok(FitResult {
        names: x.names.clone(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        p_values,
        deviance,
        df_residual: n - p,
        converged,
        iterations,
        separation,
    })
}
