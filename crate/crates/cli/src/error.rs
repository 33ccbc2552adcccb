use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CAP: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("iteration cap reached after {0} iterations (pass --allow-cap to accept)")]
    Cap(u64),
    #[error(transparent)]
    Core(#[from] asmd_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use asmd_core::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Verification(_) => exit::VERIFY_FAILED,
            CliError::Cap(_) => exit::CAP,
            CliError::Core(E::InvalidParameter(_) | E::Format(_) | E::Io(_) | E::Json(_) | E::DimensionMismatch { .. })
            | CliError::Io(_)
            | CliError::Json(_) => exit::USAGE,
            CliError::Core(E::InstanceMismatch(_) | E::TraceUnavailable | E::DimensionTooLarge(_)) => exit::USAGE,
            CliError::Core(_) | CliError::Csv(_) => exit::VERIFY_FAILED,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
