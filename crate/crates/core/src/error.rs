use std::path::PathBuf;

/// Errors raised by the solver, the diagnostics and the I/O layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    ConfigList(Vec<String>),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("block index {q} exceeds the largest resolvable index {q_max}")]
    Resolution { q: i32, q_max: i32 },

    #[error("schema error in {path}: {msg}")]
    Schema { path: PathBuf, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
