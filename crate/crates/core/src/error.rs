use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("referential integrity: {0}")]
    Reference(String),

    #[error("duplicate edge: {0}")]
    DuplicateEdge(String),

    #[error("bipartite violation: {0}")]
    Bipartite(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("missing key: {0}")]
    MissingKey(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite loss at batch {batch} (epoch {epoch}, node {node}): {detail}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        node: String,
        detail: String,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Numeric(_))
    }
}
