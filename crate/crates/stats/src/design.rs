use nalgebra::DMatrix;

use crate::{Result, StatsError};

/// Named-column regression design. Row `i` is observation `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub data: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if names.len() != data.ncols() {
            return Err(StatsError::ShapeMismatch(format!(
                "{} column names for {} columns",
                names.len(),
                data.ncols()
            )));
        }
        Ok(Self { names, data })
    }

    /// Builds a design from row-major observations.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(StatsError::ShapeMismatch(format!(
                "row of length {} for {} columns",
                bad.len(),
                p
            )));
        }
        let data = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(names, data)
    }

    /// Intercept column followed by treatment-coded dummies for `levels`
    /// (first level is the reference) and the given numeric covariates.
    ///
    /// `level_of[i]` indexes into `levels` for observation `i`.
    pub fn dummy_coded(
        levels: &[&str],
        level_of: &[usize],
        covariates: &[(&str, &[f64])],
    ) -> Result<Self> {
        let n = level_of.len();
        if levels.is_empty() {
            return Err(StatsError::InvalidInput("no factor levels".into()));
        }
        if let Some(&bad) = level_of.iter().find(|&&l| l >= levels.len()) {
            return Err(StatsError::InvalidInput(format!("level index {bad} out of range")));
        }
        for (name, values) in covariates {
            if values.len() != n {
                return Err(StatsError::ShapeMismatch(format!(
                    "covariate {name} has {} values for {n} observations",
                    values.len()
                )));
            }
        }
        let mut names = vec!["intercept".to_string()];
        names.extend(levels[1..].iter().map(|l| l.to_string()));
        names.extend(covariates.iter().map(|(name, _)| name.to_string()));
        let p = names.len();
        let n_dummies = levels.len() - 1;
        let data = DMatrix::from_fn(n, p, |i, j| match j {
            0 => 1.0,
            j if j <= n_dummies => f64::from(level_of[i] == j),
            j => covariates[j - 1 - n_dummies].1[i],
        });
        Self::new(names, data)
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Numerical rank from singular values with a relative cutoff.
    pub fn rank(&self) -> usize {
        let sv = self.data.clone().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        sv.iter().filter(|&&s| s > max * 1e-10).count()
    }
}
