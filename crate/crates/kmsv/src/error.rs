//! Error type shared across the crate.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a precondition (non-finite entries, shape mismatch).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A scalar or integer parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A data file does not conform to the expected format. `line` is the
    /// 1-based line number of the offending record (0 when unknown).
    #[error("format error at line {line}: {msg}")]
    Format { line: u64, msg: String },

    /// A solver failed numerically; carries the outer iteration index.
    #[error("solver failure at iteration {iteration}: {msg}")]
    Solver { iteration: usize, msg: String },

    /// Generic numerical failure outside a solver loop.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A metric is undefined for the given data (e.g. zero-variance targets).
    #[error("metric error: {0}")]
    Metric(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
