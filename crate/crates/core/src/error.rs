use thiserror::Error;

/// Failure modes shared by every module.
///
/// The variants map one-to-one onto the CLI exit codes: precondition and
/// domain errors are caller mistakes, numeric and consistency errors are
/// solver failures, resource errors are size guards.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("resource limit: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Precondition(_) => 2,
            Error::Numeric(_) | Error::Range(_) | Error::Consistency(_) => 3,
            Error::Resource(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
