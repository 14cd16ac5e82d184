use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid single-site distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid block code: {0}")]
    InvalidCode(String),

    #[error("empty index range [{lo}, {hi}]")]
    EmptyRange { lo: i64, hi: i64 },

    #[error("block code produced a non-finite value at site {0}")]
    NonFiniteCode(i64),

    #[error("operation requires a finite-support single-site distribution")]
    NotFiniteSupport,

    #[error("support enumeration too large ({0} words)")]
    SupportTooLarge(u128),

    #[error("freeze scheme: {0}")]
    Scheme(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("expression: {0}")]
    Expression(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
