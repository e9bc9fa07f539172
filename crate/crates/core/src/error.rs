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

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("snapshot bin {bin} out of range (series has {bins} bins)")]
    BinOutOfRange { bin: usize, bins: usize },

    #[error("invalid interval: t1={t1} must precede t2={t2}")]
    InvalidInterval { t1: usize, t2: usize },

    #[error("unknown author {0:?}")]
    UnknownAuthor(String),

    #[error("author {author:?} is not present at bin {bin}")]
    AuthorNotPresent { author: String, bin: usize },

    #[error("degree centrality is undefined for a snapshot with {nodes} node(s)")]
    CentralityUndefined { nodes: usize },

    #[error("cohort is empty")]
    EmptyCohort,

    #[error("collaborator centrality is undefined: every cohort member is isolated")]
    AllMembersIsolated,

    #[error("no log bins survived filtering; data cannot be fit")]
    Unfittable,

    #[error("a slope fit needs at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corrupt snapshot cache: {0}")]
    CorruptCache(String),

    #[error("oracle instance too large: {ops} author-pair operations (limit {limit})")]
    OracleTooLarge { ops: usize, limit: usize },

    #[error("empty corpus after ingest")]
    EmptyCorpus,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
