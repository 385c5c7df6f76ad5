use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for library operations.
///
/// Numerical *verdicts* (a chain failing to be ergodic, a certificate not
/// passing) are results, not errors; errors are reserved for invalid inputs,
/// violated preconditions, and solver breakdowns.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("space mismatch: operands live in different spaces")]
    SpaceMismatch,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numeric failure in {context}: residual {residual:.3e}")]
    Numeric { context: String, residual: f64 },

    #[error("construction failed: {0}")]
    Construction(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn numeric(context: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            context: context.into(),
            residual,
        }
    }

    pub fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }
}
