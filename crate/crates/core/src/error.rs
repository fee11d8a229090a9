//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A message vector is not unit-norm within tolerance.
    #[error("invalid message: |y|^2 deviates from 1 by {deviation:e}")]
    InvalidMessage { deviation: f64 },

    /// The selected output candidate has vanishing norm, which indicates
    /// corrupted machine state rather than a physical branch.
    #[error("degenerate emission: selected candidate norm^2 = {norm_sq:e}")]
    DegenerateEmission { norm_sq: f64 },

    /// A dataset or config file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// No CHSH quadruple had correlations defined on all four setting pairs.
    #[error("no quadruple with fully defined correlations")]
    NoValidQuadruple,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
