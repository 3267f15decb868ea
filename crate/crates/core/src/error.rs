use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed TEN4 data: {0}")]
    Format(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("model unavailable after {queries} queries: {reason}")]
    ModelUnavailable { reason: String, queries: u64 },

    /// No label flip along the direction before the search cap.
    #[error("direction infeasible: no label change up to lambda = {cap} ({queries} queries)")]
    DirectionInfeasible { cap: f64, queries: u64 },

    #[error("gradient estimate carried no information")]
    GradientUninformative,

    #[error("query budget exhausted")]
    BudgetExhausted,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
