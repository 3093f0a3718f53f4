use thiserror::Error;

/// Failures of the command-line layer.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent problem configuration (exit code 1).
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nonlocal_fredholm::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(nonlocal_fredholm::Error::Hypothesis(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
