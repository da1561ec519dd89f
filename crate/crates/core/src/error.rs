use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("target {value} outside the invertible range (0, {threshold})")]
    Range { value: f64, threshold: f64 },

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("non-regular equilibrium: {0}")]
    Regime(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("picard iteration did not converge after {iterations} iterations (last distance {distance:e})")]
    NotConverged { iterations: usize, distance: f64 },

    #[error("iterate {iterate} left the solution set: {condition}")]
    LambdaViolation { iterate: usize, condition: String },

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(field: &str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}
