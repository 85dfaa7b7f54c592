//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by tensor construction, kernels, decompositions and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition (shape mismatch,
    /// rank out of range, bad permutation, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine could not produce a reliable result; the message
    /// carries a condition estimate or residual where one is available.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A text input (`.tns` file, manifest, selection list) failed to parse.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// An archive component was missing or inconsistent.
    #[error("archive error in {file}: {msg}")]
    Archive { file: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
