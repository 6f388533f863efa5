use thiserror::Error;

/// Errors raised by the problem, operator and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("outside the valid domain: {0}")]
    OutOfDomain(String),

    #[error("lambda = {lambda} violates 0 < lambda < 1/rho_max(BB^T) = {limit}")]
    InvalidLambda { lambda: f64, limit: f64 },

    #[error("linear system is not positive definite (pivot {pivot} at column {column})")]
    SingularSystem { column: usize, pivot: f64 },

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
