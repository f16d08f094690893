use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("expected header `{expected}`, found `{found}`")]
    MalformedHeader { expected: String, found: String },
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: timestamp is not after the previous row")]
    NonMonotonicTimestamps { line: u64 },
    #[error("no data rows")]
    Empty,
    #[error("invalid run configuration: {0}")]
    Config(String),
}

impl ReportError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ReportError::Io { path: path.into(), source }
    }

    pub(crate) fn row(line: u64, reason: impl Into<String>) -> Self {
        ReportError::MalformedRow { line, reason: reason.into() }
    }
}
