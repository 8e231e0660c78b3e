//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter outside its admissible range (bad alpha, negative scale, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The integrand fails the membership test for the requested noise.
    #[error("integrand rejected: {0}")]
    IntegrandRejected(String),

    /// A quadrature did not converge or detected divergence.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// A lattice window cannot cover the kernel within the truncation budget.
    #[error("truncation budget exceeded: {0}")]
    Truncation(String),

    /// Kernel expression could not be parsed; `pos` is a byte offset.
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// Requested combination is out of the implemented scope.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
