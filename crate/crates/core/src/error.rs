use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid event sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("query time {query} precedes the last history timestamp {last}")]
    TimeBeforeHistory { query: f64, last: f64 },
    #[error("thinning bound violated at t={t}: intensity {intensity} > bound {bound}")]
    BoundViolation { t: f64, intensity: f64, bound: f64 },
    #[error("sequence of length {len} exceeds the maximum of {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("episode already finished")]
    EpisodeDone,
    #[error("invalid action {action}; allowed: 0 or one of {allowed:?}")]
    InvalidAction { action: usize, allowed: Vec<usize> },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
