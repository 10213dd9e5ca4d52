use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. Contract violations are caller bugs
/// (bad indices, level mismatches); budget errors mean the requested
/// computation is too large for the configured caps.
#[derive(Debug, Error)]
pub enum KakeyaError {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("budget exceeded: {what} needs {needed} items, budget is {budget}{hint}")]
    Budget {
        what: &'static str,
        needed: u128,
        budget: u64,
        hint: &'static str,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = KakeyaError> = std::result::Result<T, E>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(KakeyaError::Contract(msg.into()))
}

pub(crate) fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> KakeyaError + '_ {
    move |source| KakeyaError::Io {
        path: path.to_owned(),
        source,
    }
}
