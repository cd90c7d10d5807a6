use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// `Capability` is reserved for inputs that are well formed but exceed an
/// exhaustive-enumeration bound; callers map it to a distinct exit code.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability error: {what} needs n <= {limit}, got n = {n}")]
    Capability {
        what: &'static str,
        n: usize,
        limit: usize,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
