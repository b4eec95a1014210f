use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("content has {actual} bits, parameters require {expected}")]
    ContentSize { expected: u64, actual: u64 },

    #[error("content index {index} out of range (content has {len} bits)")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("set ordinal {ordinal} out of range [1, {max}]")]
    OrdinalOutOfRange { ordinal: u32, max: u32 },

    #[error("{what} is 1-based, got 0")]
    OneBased { what: &'static str },

    #[error("no index set hashes to the hint: puzzle is malformed")]
    MalformedPuzzle,

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("strategy infeasible: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}
