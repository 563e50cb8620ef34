use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("episode finished")]
    EpisodeFinished,

    #[error("divergence detected: {0}")]
    Divergence(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed metrics file {path}: {reason}")]
    Metrics { path: String, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Prefix a divergence error with where it happened; other errors pass through.
    pub fn with_context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Divergence(msg) => Error::Divergence(format!("{ctx}: {msg}")),
            other => other,
        }
    }
}
