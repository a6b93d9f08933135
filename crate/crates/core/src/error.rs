use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation budget exhausted ({spent} of {limit} evaluations spent)")]
    BudgetExhausted { spent: u64, limit: u64 },

    #[error("budget {budget} is below the minimum of {minimum} for this algorithm")]
    BudgetTooSmall { budget: u64, minimum: u64 },

    #[error("player count mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{n} players exceeds the enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("table has no value for coalition {mask:#x}")]
    ValueMissing { mask: u128 },

    #[error("value of the empty coalition must be 0, found {0}")]
    NonZeroEmptySet(f64),

    #[error("bridge protocol error: {0}")]
    BridgeProtocol(String),

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
