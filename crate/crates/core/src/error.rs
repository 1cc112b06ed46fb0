use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("singular geometry: {0}")]
    Singular(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("linear algebra failure: {0}")]
    Linalg(&'static str),
    #[error("QP solver did not converge within {0} iterations")]
    QpMaxIter(usize),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn scenario(msg: impl Into<String>) -> Self {
        Error::Scenario(msg.into())
    }
}
