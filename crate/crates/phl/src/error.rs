use thiserror::Error;

/// Errors of the numerical pipeline and the front-end.
#[derive(Debug, Error)]
pub enum PhlError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] phl_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, PhlError>;

impl PhlError {
    /// Process exit status for the front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PhlError::NonConvergence { .. } | PhlError::Numerical(_) => 2,
            PhlError::Io(_) | PhlError::Csv(_) | PhlError::Json(_) => 3,
            PhlError::Validation(_) | PhlError::Core(_) => 4,
        }
    }
}
