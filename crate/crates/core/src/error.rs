use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: u64, message: String },

    #[error("duplicate node id {0}")]
    DuplicateNode(u64),

    #[error("edge {from}->{to} references unknown node {missing}")]
    DanglingEdge { from: u64, to: u64, missing: u64 },

    #[error("unknown node id {0}")]
    UnknownNode(u64),

    #[error("node {to} is unreachable from node {from}")]
    Unreachable { from: u64, to: u64 },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("could not draw a reachable origin/destination pair after {0} attempts")]
    RetryBudgetExhausted(usize),

    #[error("brute-force partition limited to {limit} requests, got {actual}")]
    SizeLimit { limit: usize, actual: usize },

    #[error("{0}")]
    Schema(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn malformed(file: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Malformed {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn from_csv(file: &str, err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        Error::malformed(file, line, err.to_string())
    }
}
