use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("schema violation: attribute `{attribute}` does not accept `{token}`")]
    SchemaViolation { attribute: String, token: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capability mismatch: {0}")]
    Capability(String),

    #[error("training failed at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("attack dataset is empty: no record fell into case 1; fall back to the naive attack")]
    EmptyAttackDataset,

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("artifact format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from invalid input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Training { .. } | Error::EmptyAttackDataset)
    }
}
