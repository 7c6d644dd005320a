use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("iteration failed to converge: {0}")]
    NonConvergence(String),
    #[error("singular value: {0}")]
    Singularity(String),
    #[error("invalid profile: {0}")]
    Validation(String),
    #[error("root bracket failure: {0}")]
    RootBracket(String),
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("problem too large: {0}")]
    Size(String),
    #[error("unstable time step: {0}")]
    Instability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
