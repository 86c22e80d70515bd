use std::path::PathBuf;

/// Errors of the experiment layer, grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] omnistat_core::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("infeasible budget: {0}")]
    Budget(String),
    #[error("guarantee violated: {0}")]
    Violation(String),
    #[error("linear program failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    /// `0` success, `2` invalid config, `3` infeasible budget, `4` guarantee
    /// violation; everything else is `1`.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Format { .. } => 2,
            Error::Core(omnistat_core::Error::InvalidParameter(_))
            | Error::Core(omnistat_core::Error::Unsupported(_))
            | Error::Core(omnistat_core::Error::FamilyMismatch(_))
            | Error::Core(omnistat_core::Error::IneligibleLoss { .. }) => 2,
            Error::Budget(_) | Error::Core(omnistat_core::Error::SampleBudget { .. }) => 3,
            Error::Violation(_) => 4,
            _ => 1,
        }
    }
}
