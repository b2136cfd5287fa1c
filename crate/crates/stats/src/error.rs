use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("design matrix is rank deficient (rank {rank} < {columns} columns)")]
    SingularDesign { rank: usize, columns: usize },

    #[error("undefined test: {0}")]
    UndefinedTest(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
