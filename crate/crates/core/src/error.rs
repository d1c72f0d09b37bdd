use alloc::string::String;

use crate::model::ValidationReport;

/// Errors raised by the synthesis, estimation and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    Dimension {
        what: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("time index {k} outside horizon 0..{horizon}")]
    OutOfHorizon { k: usize, horizon: usize },
    #[error("length mismatch in {what}: expected {expected}, found {found}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{what} is numerically singular or not positive definite")]
    Singular { what: &'static str },
    #[error("{what} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    Indefinite {
        what: &'static str,
        min_eigenvalue: f64,
    },
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error(
        "Riccati iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },
    #[error("open-loop eigenvalues {i} and {j} coincide")]
    RepeatedEigenvalue { i: usize, j: usize },
    #[error("input entry {0} is zero; mode is uncontrollable")]
    ZeroInput(usize),
    #[error("scenario failed validation:\n{0}")]
    Validation(ValidationReport),
    #[error("{0}")]
    Mode(String),
}

pub type Result<T> = core::result::Result<T, Error>;
