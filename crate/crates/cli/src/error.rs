use coherence_core::Error as CoreError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("self-test failed: {0}")]
    SelftestFailed(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("resource limit: {0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::SelftestFailed(_) => 1,
            Self::Input(_) => 2,
            Self::Solver(_) => 3,
            Self::Unsupported(_) => 4,
            Self::Resource(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::SolverFailure { .. } | CoreError::RouteDisagreement { .. } => Self::Solver(e.to_string()),
            CoreError::ResourceLimit { .. } => Self::Resource(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<coherence_core::LinalgError> for CliError {
    fn from(e: coherence_core::LinalgError) -> Self {
        Self::Solver(e.to_string())
    }
}
