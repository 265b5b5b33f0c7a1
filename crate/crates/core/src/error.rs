use thiserror::Error;

pub type Result<T> = std::result::Result<T, DrrpError>;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum DrrpError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{context} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl DrrpError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DrrpError::InvalidInput(msg.into())
    }

    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        DrrpError::DimensionMismatch {
            context,
            expected,
            found,
        }
    }

    /// Prefix the error with the outer iteration at which it happened.
    pub fn at_iteration(self, solver: &str, k: usize) -> Self {
        match self {
            DrrpError::NonConvergence {
                context,
                iterations,
                residual,
            } => DrrpError::NonConvergence {
                context: format!("{solver} iteration {k}: {context}"),
                iterations,
                residual,
            },
            DrrpError::Numerical(m) => DrrpError::Numerical(format!("{solver} iteration {k}: {m}")),
            DrrpError::Degenerate(m) => DrrpError::Degenerate(format!("{solver} iteration {k}: {m}")),
            other => other,
        }
    }
}
