//! Minimum-norm multi-output least squares and pooled R².

use nalgebra::{DMatrix, DVector};

use crate::{Result, StatsError};

/// Singular values below `SVD_RELATIVE_CUTOFF * max(σ)` are treated as zero.
pub const SVD_RELATIVE_CUTOFF: f64 = 1e-10;

/// A fitted multi-output linear map `y = xᵀW + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDecoder {
    /// `D × K` weights.
    pub weights: DMatrix<f64>,
    /// Length-`K` intercept.
    pub intercept: DVector<f64>,
    /// Numerical rank of the (centered) training design.
    pub rank: usize,
}

impl LinearDecoder {
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Predicts one row per row of `x` (`N × D` → `N × K`).
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(StatsError::ShapeMismatch(format!(
                "decoder expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let mut out = x * &self.weights;
        for mut row in out.row_iter_mut() {
            row += self.intercept.transpose();
        }
        Ok(out)
    }
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

fn center(m: &DMatrix<f64>, means: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    out
}

/// Minimum-norm least-squares fit of `y` (`N × K`) on `x` (`N × D`), with an
/// unpenalized intercept.
///
/// Both sides are centered on their training means and the centered problem
/// is solved through the SVD pseudoinverse. When `D ≥ N − 1` the training
/// targets are interpolated exactly.
pub fn min_norm_least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<LinearDecoder> {
    if x.nrows() != y.nrows() {
        return Err(StatsError::ShapeMismatch(format!(
            "{} activation rows for {} target rows",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < 2 {
        return Err(StatsError::InvalidInput("need at least 2 observations".into()));
    }
    let x_mean = column_means(x);
    let y_mean = column_means(y);
    let xc = center(x, &x_mean);
    let yc = center(y, &y_mean);

    // Thin SVD of the wide-or-tall centered design.
    let svd = xc.svd(true, true);
    let u = svd.u.expect("U requested");
    let v_t = svd.v_t.expect("Vᵀ requested");
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = max_sv * SVD_RELATIVE_CUTOFF;

    // W = V Σ⁺ Uᵀ Y
    let mut uty = u.transpose() * &yc;
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            uty.row_mut(i).scale_mut(1.0 / s);
        } else {
            uty.row_mut(i).fill(0.0);
        }
    }
    let weights = v_t.transpose() * uty;
    let intercept = &y_mean - weights.transpose() * &x_mean;
    Ok(LinearDecoder {
        weights,
        intercept,
        rank,
    })
}

/// Pooled multi-output R²: one minus the total squared residual over the
/// total squared deviation from each column's mean in `y_true`.
pub fn r2_multioutput(y_true: &DMatrix<f64>, y_pred: &DMatrix<f64>) -> Result<f64> {
    if y_true.shape() != y_pred.shape() {
        return Err(StatsError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            y_true.shape(),
            y_pred.shape()
        )));
    }
    if y_true.nrows() < 2 {
        return Err(StatsError::InvalidInput("need at least 2 rows".into()));
    }
    let means = column_means(y_true);
    let ss_res = (y_true - y_pred).norm_squared();
    let ss_tot = center(y_true, &means).norm_squared();
    if ss_tot == 0.0 {
        return Err(StatsError::UndefinedMetric("targets have zero variance".into()));
    }
    Ok(1.0 - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(r2_multioutput(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn column_mean_prediction_scores_zero() {
        let y = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 0.0]);
        let means = column_means(&y);
        let pred = DMatrix::from_fn(4, 2, |_, j| means[j]);
        assert!(r2_multioutput(&y, &pred).unwrap().abs() < 1e-15);
    }

    #[test]
    fn constant_wrong_predictor_matches_hand_formula() {
        // Column means (2, 1); ss_tot = 8 + 2 = 10.
        // Predict (5, 5): ss_res = (16+9+4+1) + (16+16+16+16) = 30 + 64 = 94.
        let y = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 3.0, 1.0, 0.0, 0.0, 4.0, 2.0]);
        let pred = DMatrix::from_element(4, 2, 5.0);
        let ss_res: f64 = [1.0f64, 3.0, 0.0, 4.0].iter().map(|v| (v - 5.0).powi(2)).sum::<f64>()
            + [1.0f64, 1.0, 0.0, 2.0].iter().map(|v| (v - 5.0).powi(2)).sum::<f64>();
        let ss_tot: f64 = [1.0f64, 3.0, 0.0, 4.0].iter().map(|v| (v - 2.0).powi(2)).sum::<f64>()
            + [1.0f64, 1.0, 0.0, 2.0].iter().map(|v| (v - 1.0).powi(2)).sum::<f64>();
        let expected = 1.0 - ss_res / ss_tot;
        let got = r2_multioutput(&y, &pred).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!(got < 0.0);
    }

    #[test]
    fn zero_variance_target_undefined() {
        let y = DMatrix::from_element(3, 2, 1.0);
        assert!(matches!(r2_multioutput(&y, &y), Err(StatsError::UndefinedMetric(_))));
    }

    #[test]
    fn shape_mismatch() {
        let x = DMatrix::<f64>::zeros(3, 2);
        let y = DMatrix::<f64>::zeros(4, 2);
        assert!(min_norm_least_squares(&x, &y).is_err());
        assert!(r2_multioutput(&x, &y).is_err());
    }
}
