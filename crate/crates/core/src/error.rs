use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A CSV cell or structural problem. `row` is the 1-based data row
    /// (the header is row 0); `column` is the header name when known.
    #[error("csv {path}: row {row}, column {column}: {message}")]
    Csv {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: String, message: String },

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("task mismatch: {0}")]
    TaskMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid needs {cells} cells (beta={beta}, dims={dims}), above the cap of {cap}")]
    CellCapExceeded {
        beta: usize,
        dims: usize,
        /// Human-readable cell count, e.g. `10^78`.
        cells: String,
        cap: u64,
    },

    #[error("box side {dim} is unbounded and no dataset bounds are available to clamp it")]
    UnboundedBox { dim: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dim(what: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            expected,
            got,
        }
    }
}
