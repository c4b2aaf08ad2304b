use thiserror::Error;

/// Failure classes of the command line, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<qzzb_core::Error> for CliError {
    fn from(e: qzzb_core::Error) -> Self {
        use qzzb_core::Error as E;
        match e {
            E::Index { .. } | E::Domain(_) | E::Range(_) | E::DimensionMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            E::Internal(_) | E::Truncation { .. } | E::Convergence(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Numeric(format!("csv writer: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numeric(format!("json writer: {e}"))
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
