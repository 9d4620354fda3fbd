//! Crate-wide error type and result alias.

use std::fmt;
use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors emitted by the engine, data pipeline, trainer, and experiments.
#[derive(Debug)]
pub enum Error {
    /// Tensor or layer shapes do not line up; names the offending axis.
    Dimension { op: &'static str, detail: String },
    /// A configuration value is invalid or layers cannot be composed.
    Config(String),
    /// A class label is outside the valid range.
    Label { label: usize, classes: usize },
    /// A manifest line or image file could not be ingested.
    Ingest {
        path: PathBuf,
        line: Option<usize>,
        detail: String,
    },
    /// Feature sets do not cover the same samples.
    Alignment { missing: Vec<String> },
    /// A checkpoint file is malformed, truncated, or mismatched.
    Checkpoint(String),
    /// Training produced a non-finite loss; carries diagnostics.
    NanLoss {
        iteration: usize,
        lr: f64,
        batch: Vec<usize>,
    },
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl Error {
    pub(crate) fn dimension(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(detail: impl Into<String>) -> Self {
        Error::Config(detail.into())
    }

    pub(crate) fn ingest(path: impl Into<PathBuf>, line: Option<usize>, detail: impl Into<String>) -> Self {
        Error::Ingest {
            path: path.into(),
            line,
            detail: detail.into(),
        }
    }

    /// Process exit code for the CLI: 1 for rejected input, 2 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension { .. }
            | Error::Config(_)
            | Error::Label { .. }
            | Error::Ingest { .. }
            | Error::Alignment { .. }
            | Error::Checkpoint(_) => 1,
            Error::NanLoss { .. } | Error::Io(_) => 2,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { op, detail } => write!(f, "{op}: dimension mismatch: {detail}"),
            Error::Config(detail) => write!(f, "invalid configuration: {detail}"),
            Error::Label { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            Error::Ingest { path, line, detail } => match line {
                Some(n) => write!(f, "{}:{n}: {detail}", path.display()),
                None => write!(f, "{}: {detail}", path.display()),
            },
            Error::Alignment { missing } => {
                write!(f, "feature sets are not aligned; missing refs: {missing:?}")
            }
            Error::Checkpoint(detail) => write!(f, "bad checkpoint: {detail}"),
            Error::NanLoss { iteration, lr, batch } => write!(
                f,
                "non-finite loss at iteration {iteration} (lr={lr}, batch ids {batch:?})"
            ),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
