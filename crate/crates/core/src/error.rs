//! Shared error type for the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation's mathematical precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed input file or value that fails schema validation.
    #[error("schema error: {0}")]
    Schema(String),

    /// Expression text could not be parsed. `offset` is a byte offset into the input.
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Expression evaluation left the domain of a primitive (sqrt of a negative,
    /// division by zero, ...) at a particular atom.
    #[error("domain error at atom '{atom}': {message}")]
    Domain { atom: String, message: String },

    /// An iterative solve did not reach the requested tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A sampler could not produce any feasible sample.
    #[error("sampling failure: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }
}
