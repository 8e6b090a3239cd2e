use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot parse config: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] dgff::Error),

    #[error("stale report: {0}")]
    Stale(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn config_error(field: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.into(),
        message: message.into(),
    }
}

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
