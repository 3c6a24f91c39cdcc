use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// A quadrature or iterative routine failed to reach its tolerance.
    #[error("numerical non-convergence: {message} (achieved estimate {estimate:e})")]
    NonConvergence { message: String, estimate: f64 },
    /// A named registry entry does not exist.
    #[error("unknown {kind} `{name}`")]
    Lookup { kind: &'static str, name: String },
    /// Stored data failed an exact consistency check.
    #[error("data integrity error: {0}")]
    DataIntegrity(String),
    /// A search or solve found no admissible value in its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A ray-set file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
