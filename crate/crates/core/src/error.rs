use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("xml error at byte {position}: {message}")]
    Xml { position: u64, message: String },

    #[error("dump stream truncated inside a <page> element after {complete_pages} complete pages")]
    TruncatedDump { complete_pages: u64 },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("key and response cover different mentions: {0}")]
    UniverseMismatch(String),

    #[error("invalid score matrix: {0}")]
    InvalidScores(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown task {0}")]
    UnknownTask(u64),

    #[error("invalid judgment: {0}")]
    InvalidJudgment(String),

    #[error("{count} tasks of split {split} are not judged yet: {ids:?}")]
    Unjudged { split: String, count: usize, ids: Vec<u64> },

    #[error("judgment sets cover different tasks: {0}")]
    TaskMismatch(String),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
