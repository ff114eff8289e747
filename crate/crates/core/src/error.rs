use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("degenerate mode: {0}")]
    Degenerate(String),

    #[error("divergent limit: I_{0} has no finite value with lower limit 0")]
    DivergentLimit(usize),

    #[error("no peak found: {0}")]
    NoPeak(String),

    #[error("diagnostic: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
