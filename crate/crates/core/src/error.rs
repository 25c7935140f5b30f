use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("index {index} out of range for {len} features")]
    Index { index: usize, len: usize },

    #[error("statistics error: {0}")]
    Stat(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("dimension mismatch: {0}")]
    Dim(String),

    #[error("cross-validation error: {0}")]
    Cv(String),

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("{role} curve failed at fraction {fraction:.6}, replicate {replicate}: {source}")]
    Protocol {
        role: &'static str,
        fraction: f64,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips protocol context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Protocol { source, .. } => source.root(),
            other => other,
        }
    }
}
