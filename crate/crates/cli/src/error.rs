use std::fmt;

use collinear_core::CoreError;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitKind {
    InvalidInput = 1,
    CloseApproach = 2,
    SolverFailure = 3,
    Hypothesis = 4,
    VerificationFailed = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::InvalidInput, message: message.into() }
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }

    /// Maps a core error raised while preparing or running a scenario.
    pub fn from_core(err: CoreError, context: &str) -> Self {
        let kind = match &err {
            CoreError::CloseApproach { .. } | CoreError::StepUnderflow { .. } => ExitKind::CloseApproach,
            CoreError::SolverFailure { .. } | CoreError::AmbiguousRoots { .. } => ExitKind::SolverFailure,
            _ => ExitKind::InvalidInput,
        };
        let message = if context.is_empty() { err.to_string() } else { format!("{context}: {err}") };
        Self { kind, message }
    }

    /// Maps an error raised by a theorem check.
    pub fn from_verification(err: CoreError) -> Self {
        match err {
            CoreError::Precondition(msg) => Self { kind: ExitKind::Hypothesis, message: format!("hypothesis violation: {msg}") },
            other => Self::from_core(other, "verification"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::invalid(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::invalid(format!("csv error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl ExitKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::InvalidInput => "invalid_input",
            Self::CloseApproach => "close_approach",
            Self::SolverFailure => "solver_failure",
            Self::Hypothesis => "hypothesis_violation",
            Self::VerificationFailed => "verification_failed",
        }
    }
}
