//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]. The variants are grouped by
//! failure class rather than by module so the CLI can map them to process
//! exit codes and the C ABI can map them to integer error codes.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Expression text failed to parse. `position` is a byte offset into the source.
    #[error("parse error at offset {position}: {message}")]
    Parse { message: String, position: usize },

    /// An evaluation produced a non-finite value or hit a coordinate singularity.
    #[error("singular evaluation: {0}")]
    Singular(String),

    /// A state or field was used against a space of a different dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Input outside an operation's mathematical domain (chart boundary,
    /// degenerate point, non-positive inertia, ...).
    #[error("domain violation: {0}")]
    Domain(String),

    /// Structurally invalid argument: wrong field count, mismatched spaces,
    /// missing analytic gradient, and the like.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Integration aborted; `t` is the last successfully completed time.
    #[error("integration failed at t = {t}: {message}")]
    Integration { message: String, t: f64 },

    /// Run configuration rejected.
    #[error("configuration error: {0}")]
    Config(String),

    /// I/O failure while reading or writing artifacts.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
