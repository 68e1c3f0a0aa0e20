//! Error type shared by every module.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("accuracy error: {what} (estimated relative error {estimate:.3e})")]
    Accuracy { what: String, estimate: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameters not identifiable: {0}")]
    Identifiability(String),

    #[error("rank-deficient design matrix (condition number {cond:.3e})")]
    RankDeficient { cond: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
