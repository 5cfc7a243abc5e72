//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AsmgError>;

#[derive(Debug, Error)]
pub enum AsmgError {
    /// Invalid user-facing configuration (grid size, covering, hierarchy depth, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    /// A dense factorization hit a non-positive (Cholesky) or zero (LU) pivot.
    #[error("factorization failed at pivot {pivot} (value {value:e}){context}")]
    Factorization {
        pivot: usize,
        value: f64,
        context: String,
    },

    #[error("{solver} did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverStall {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Non-positive search-direction curvature in a conjugate-gradient type method.
    #[error("{solver} breakdown at level {level}: direction curvature {curvature:e}")]
    Breakdown {
        solver: &'static str,
        level: usize,
        curvature: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    /// Bug traps that must never fire for valid inputs.
    #[error("internal error: {0}")]
    Internal(String),
}

impl AsmgError {
    pub(crate) fn factorization(pivot: usize, value: f64) -> Self {
        AsmgError::Factorization {
            pivot,
            value,
            context: String::new(),
        }
    }

    /// Attaches a location (for example a subdomain id) to a factorization error.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            AsmgError::Factorization { pivot, value, .. } => AsmgError::Factorization {
                pivot,
                value,
                context: format!(" in {}", ctx.into()),
            },
            other => other,
        }
    }
}
