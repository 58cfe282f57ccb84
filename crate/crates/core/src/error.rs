use thiserror::Error;

pub type Result<T, E = CertError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("confidence sequence has no observations")]
    EmptyState,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("classifier failure: {0}")]
    Classifier(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input")]
    EmptyInput,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CertError {
    fn from(err: std::io::Error) -> Self {
        CertError::Io(err.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> CertError {
    CertError::InvalidArgument(msg.into())
}
