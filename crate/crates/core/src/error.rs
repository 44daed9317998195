use thiserror::Error;

use crate::means::SolveDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by tensor arithmetic, mean solvers and inequality checks.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("tensor is not Hermitian: deviation {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("tensor is not positive definite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("Hermitian eigensolver did not converge")]
    EigenSolverFailed,

    #[error("spectral function undefined at eigenvalue {eigenvalue:e}")]
    FunctionUndefined { eigenvalue: f64 },

    #[error("tensor is singular: minimum singular value {min_singular_value:e}")]
    Singular { min_singular_value: f64 },

    #[error("expected {expected} inputs, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver did not converge after {} iterations (last step {:e})", .diagnostics.iterations, .diagnostics.final_step_thompson)]
    NotConverged { diagnostics: SolveDiagnostics },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("input {index} lies outside the spectral window [{m}, {big_m}]")]
    OutsideWindow { index: usize, m: f64, big_m: f64 },

    #[error("malformed tensor data: {0}")]
    Format(String),

    #[error("trial {index}: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotConverged { .. } | Error::NumericalBreakdown(_) | Error::EigenSolverFailed => {
                true
            }
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
