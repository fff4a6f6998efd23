use thiserror::Error;

/// Errors raised by the CCA toolkit.
///
/// Variants split into two families that the CLI maps to distinct exit codes:
/// bad input (shapes, parameters, files) and numerical failure (singular
/// covariance, non-finite results).
#[derive(Debug, Error)]
pub enum CcaError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {what} expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is singular: smallest eigenvalue {eigenvalue:e} is not positive{hint}")]
    Singular { eigenvalue: f64, hint: &'static str },

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("stream ended after {completed} of {requested} iterations")]
    EarlyTermination { completed: usize, requested: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("insufficient samples: need at least {required} (tau + T), dataset has {available}")]
    InsufficientSamples { required: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CcaError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        CcaError::Input(msg.into())
    }

    /// True when the failure stems from numerics rather than from the caller.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CcaError::Singular { .. } | CcaError::Numerical(_) | CcaError::Degenerate(_)
        )
    }
}

pub type Result<T, E = CcaError> = std::result::Result<T, E>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(CcaError::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
