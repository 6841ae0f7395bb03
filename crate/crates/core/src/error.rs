use thiserror::Error;

use crate::entropy::RhoResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed tensor file: {0}")]
    Parse(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The optimizer ran out of iterations; carries the best iterate found.
    #[error("iteration budget exceeded after {} iterations (gap {:.3e})", best.iterations, best.residual)]
    BudgetExceeded { best: Box<RhoResult> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
