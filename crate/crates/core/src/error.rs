use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// No closed form is available; the caller should fall back to quadrature or the grid oracle.
    #[error("needs oracle: {0}")]
    NeedsOracle(String),

    #[error("evaluation budget exceeded: {required} evaluations required, {allowed} allowed")]
    BudgetExceeded { required: u64, allowed: u64 },

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    NonConvergent { achieved: f64, requested: f64 },

    #[error("tail bound unavailable: {0}")]
    TailUnavailable(String),

    #[error("not integrable: {0}")]
    NotIntegrable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
