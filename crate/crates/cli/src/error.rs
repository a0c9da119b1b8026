use hardy_core::Error as CoreError;

/// Failure classes, each with its own process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or unreadable configuration (exit 1).
    #[error("config error: {0}")]
    Config(String),
    /// One or more invariants failed (exit 2).
    #[error("assertion failure: {}", .0.join("; "))]
    Assertion(Vec<String>),
    /// A numerical solver or the filesystem gave up (exit 3).
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn json(e: &serde_json::Error) -> Self {
        CliError::Config(format!("{e} (line {}, column {})", e.line(), e.column()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Assertion(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_)
            | CoreError::Domain { .. }
            | CoreError::Precondition(_)
            | CoreError::EmptyEtaRange { .. }
            | CoreError::H6Validation(_) => CliError::Config(e.to_string()),
            CoreError::Positivity { .. } => CliError::Assertion(vec![e.to_string()]),
            CoreError::Solver(_)
            | CoreError::NotPositiveDefinite(_)
            | CoreError::SingularQuadrature { .. }
            | CoreError::Io(_) => CliError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Solver(format!("i/o: {e}"))
    }
}
