use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A type invariant failed; `field` names the offending input.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: expected {expected} knots, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("target-out-of-range: {0}")]
    TargetOutOfRange(String),

    #[error("no-parity-solution: {0}")]
    NoParitySolution(String),

    #[error("structural condition violated: eta = {eta}")]
    StructuralCondition { eta: f64 },

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(field: &str, message: &str) -> Self {
        Error::Invalid {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    /// Solver failures map to exit status 2, everything else to 1.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_)
                | Error::TargetOutOfRange(_)
                | Error::NoParitySolution(_)
                | Error::BoundViolation(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid { .. } => "validation",
            Error::Domain(_) => "domain",
            Error::GridMismatch { .. } => "grid",
            Error::NonConvergence(_) => "non-convergence",
            Error::TargetOutOfRange(_) => "target-out-of-range",
            Error::NoParitySolution(_) => "no-parity-solution",
            Error::StructuralCondition { .. } => "structural-condition",
            Error::BoundViolation(_) => "bound-violation",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
