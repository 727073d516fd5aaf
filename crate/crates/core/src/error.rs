use std::path::PathBuf;

use thiserror::Error;

use crate::umap::UncertaintyKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: bad field `{field}`: {message}")]
    Format {
        path: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing referenced files: {}", display_paths(.0))]
    MissingPaths(Vec<PathBuf>),

    #[error("unsupported format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("uncertainty kind `{0}` is not supported by this computation")]
    UnsupportedKind(UncertaintyKind),

    #[error("empty visual hull: {0}")]
    EmptyHull(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("predictor peer error: {0}")]
    Peer(String),

    #[error("predictor protocol error: {message} (line: {line:?})")]
    Protocol { line: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(
        path: impl std::fmt::Display,
        line: usize,
        field: &str,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.to_string(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// True for failures caused by an external predictor process.
    pub fn is_peer(&self) -> bool {
        matches!(self, Error::Peer(_) | Error::Protocol { .. })
    }
}

fn display_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
