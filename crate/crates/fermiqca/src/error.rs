use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the domain of an operation (unknown mode, bad shape, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// The computation would exceed the configured dense-simulation budget.
    #[error("resource error: {0}")]
    Resource(String),
    /// A documented precondition on the input was violated.
    #[error("contract error: {0}")]
    Contract(String),
    /// A construct outside the supported model (see the module docs).
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
