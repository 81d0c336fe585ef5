use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Process-level failures. Constraint violations are never errors; they are
/// part of a successful report.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Unachievable(String),

    #[error("internal invariant breached: {0}")]
    Internal(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Unachievable(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<imflow_core::Error> for CliError {
    fn from(e: imflow_core::Error) -> Self {
        use imflow_core::Error as E;
        match e {
            E::PatternUnachievable { .. } => CliError::Unachievable(e.to_string()),
            E::NegativeInformation { .. } | E::InconsistentPoint(_) => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("invalid JSON: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(format!("invalid CSV: {e}"))
    }
}
