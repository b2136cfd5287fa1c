//! Statistical kernel for the grid-world analyses.
//!
//! Everything here is a pure function over slices or `nalgebra` matrices:
//! ordinary and logistic regression, Welch's t-test, the Wilcoxon
//! signed-rank test, permutation p-values, Bonferroni correction,
//! per-unit slope tests and minimum-norm multi-output least squares.

mod design;
mod error;
mod lstsq;
mod regression;
mod hypothesis;

pub use design::DesignMatrix;
pub use error::StatsError;
pub use lstsq::{min_norm_least_squares, r2_multioutput, LinearDecoder, SVD_RELATIVE_CUTOFF};
pub use regression::{logistic_irls, ols_fit, FitResult, IRLS_MAX_ITER, IRLS_TOLERANCE};
pub use hypothesis::{
    bonferroni, pearson_slope_test, permutation_test_r2, welch_t_test, wilcoxon_exact,
    wilcoxon_normal, wilcoxon_signed_rank, PearsonResult, TestMethod, TestResult,
    WILCOXON_EXACT_MAX_N,
};

pub type Result<T> = std::result::Result<T, StatsError>;
