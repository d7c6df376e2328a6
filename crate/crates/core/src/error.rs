use thiserror::Error;

/// Errors raised by constructions, certificates and serialization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate configuration: no general-position sample in {attempts} attempts")]
    DegenerateConfiguration { attempts: usize },

    #[error("invalid rainbow spec: {0}")]
    InvalidSpec(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("malformed input at {location}: {message}")]
    MalformedInput { location: String, message: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("clique count overflowed 2^63 - 1")]
    Overflow,

    #[error("conditioning event not hit within {budget} draws")]
    ConditioningFailure { budget: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn malformed(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::MalformedInput {
        location: location.into(),
        message: message.into(),
    }
}
