use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands (or an operand and a model) have incompatible shapes.
    #[error("shape mismatch: {left} vs {right}")]
    Shape { left: String, right: String },

    /// A caller-supplied argument is out of its valid domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The data itself violates an invariant (missing class, bad label, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A text input could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// An experiment or algorithm configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// The experimental protocol was violated (unmatched pairing, leaked index, ...).
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A single run failed; carries the coordinates of the failing cell.
    #[error("run failed [{context}]: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn shape(left: impl Into<String>, right: impl Into<String>) -> Self {
        Error::Shape {
            left: left.into(),
            right: right.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
