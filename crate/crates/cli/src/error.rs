use std::fmt;

use vos_core::models::ModelError;
use vos_core::{FieldError, ImagingError, MetricError, RegularizerError, SolverError, SweepError};

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or parameter values (exit 2).
    Usage(String),
    /// Unreadable or unwritable files and malformed inputs (exit 3).
    Io(String),
    /// The solver produced non-finite iterates (exit 4).
    Diverged(String),
    /// `check-ops` found a violated identity (exit 1).
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Violation(_) => 1,
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
            Self::Diverged(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "invalid arguments: {m}"),
            Self::Io(m) => write!(f, "{m}"),
            Self::Diverged(m) => write!(f, "solver diverged: {m}"),
            Self::Violation(m) => write!(f, "identity violated: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(format!("I/O error: {e}"))
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::NegativeVariance(_) | ImagingError::InvalidSynthetic(_) => Self::Usage(e.to_string()),
            _ => Self::Io(e.to_string()),
        }
    }
}

impl From<RegularizerError> for CliError {
    fn from(e: RegularizerError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Diverged { .. } => Self::Diverged(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Solver(s) => s.into(),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        // Shape mismatch between the result and the supplied truth.
        Self::Io(format!("cannot compare against ground truth: {e}"))
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::InvalidPlan(_) | SweepError::InvalidBinning(_) | SweepError::Pool(_) => Self::Usage(e.to_string()),
            SweepError::Solver(s) => s.into(),
            SweepError::Imaging(i) => i.into(),
            _ => Self::Io(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(CliError::from(SolverError::Diverged { iteration: 3 }).exit_code(), 4);
        assert_eq!(CliError::from(ModelError::Solver(SolverError::Diverged { iteration: 3 })).exit_code(), 4);
        assert_eq!(CliError::from(SolverError::InvalidConfig("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(RegularizerError::NonPositiveAlpha(0.0)).exit_code(), 2);
        assert_eq!(CliError::from(ImagingError::NegativeVariance(-1.0)).exit_code(), 2);
        assert_eq!(CliError::from(ImagingError::Malformed("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(std::io::Error::other("x")).exit_code(), 3);
        assert_eq!(CliError::from(SweepError::InvalidBinning("x".into())).exit_code(), 2);
        assert_eq!(CliError::Violation("x".into()).exit_code(), 1);
    }
}
