use smoothcert_core::CertError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Cert(#[from] CertError),
}

impl CliError {
    /// 2 for configuration problems, 3 for unreadable or malformed data.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Cert(e) => match e {
                CertError::Parse { .. }
                | CertError::EmptyInput
                | CertError::Io(_)
                | CertError::GridMismatch(_) => 3,
                CertError::InvalidArgument(_) => 2,
                _ => 1,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
