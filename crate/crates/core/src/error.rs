use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ledger not finalized: day {day} of {horizon}")]
    NotFinalized { day: usize, horizon: usize },

    #[error("degenerate state: {0}")]
    Degenerate(&'static str),

    #[error("pool is empty and must be refilled before predicting")]
    EmptyPool,

    #[error("privacy budget exhausted after {calls} calls")]
    BudgetExhausted { calls: usize },

    #[error("causality violation on day {day}: {detail}")]
    Causality { day: usize, detail: String },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
