use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or algorithm parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Observed data violates a precondition (e.g. non-positive reaction time).
    #[error("invalid data: {0}")]
    Data(String),

    /// Inputs are individually valid but do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error("warmup adaptation failed: {0}")]
    Adaptation(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
