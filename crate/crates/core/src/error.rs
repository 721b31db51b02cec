use thiserror::Error;

/// Errors raised by the weight algebra, operators and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("power term with exponent {exponent} is not integrable at its offset")]
    NonIntegrable { exponent: f64 },

    #[error("average over an interval of zero length")]
    ZeroLength,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("intervals do not form a chain ordered by inclusion")]
    NotAChain,

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
