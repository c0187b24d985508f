use bose_genfun_core::Error as CoreError;

/// Failure of a subcommand, carrying the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("tolerance breach: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidInput(_) | CoreError::ShapeMismatch { .. } | CoreError::Csv(_) => CliError::Config(msg),
            CoreError::DimensionCap { .. } => CliError::Config(msg),
            CoreError::Domain { .. } | CoreError::NotContraction { .. } => CliError::Domain(msg),
            CoreError::QuadratureFailed { .. } | CoreError::NotConverged(_) | CoreError::Truncation { .. } => {
                CliError::Tolerance(msg)
            }
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
