use num_complex::Complex64;
use thiserror::Error;

use crate::lsd::EquationVariant;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Autoregressive polynomial has roots on or inside the unit circle.
    #[error("non-causal autoregressive polynomial; offending roots: {}", format_roots(.roots))]
    NonCausal { roots: Vec<Complex64> },

    #[error(
        "coefficient tail variance cannot be brought below {tail_tol:e} of the total within {max_horizon} terms; raise tail_tol or set an explicit horizon"
    )]
    TruncationUnattainable { tail_tol: f64, max_horizon: usize },

    #[error("horizon {horizon} leaves tail variance ratio {ratio:e} above tolerance {tail_tol:e}")]
    HorizonTooShort {
        horizon: usize,
        ratio: f64,
        tail_tol: f64,
    },

    #[error("index range overflow: {0}")]
    IndexOverflow(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error(
        "innovation block covers indices {have_first}..={have_last} but {need_first}..={need_last} are required"
    )]
    StreamMisaligned {
        need_first: i64,
        need_last: i64,
        have_first: i64,
        have_last: i64,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("eigenvalue iteration did not converge for eigenvalue index {index}")]
    EigenNoConvergence { index: usize },

    #[error("spectral argument z = {z} is not in the upper half plane")]
    NotUpperHalfPlane { z: Complex64 },

    #[error("integrand denominator vanishes at omega = {omega}")]
    SingularIntegrand { omega: f64 },

    #[error("fixed-point solver did not converge at z = {z} after {iterations} iterations (residual {residual:e})")]
    SolverNoConvergence {
        z: Complex64,
        residual: f64,
        iterations: usize,
    },

    #[error("no equation variant matched the simulation: {}", format_table(.evidence))]
    CalibrationNoMatch { evidence: Vec<(EquationVariant, f64)> },

    #[error("ambiguous calibration, several variants matched: {}", format_table(.evidence))]
    CalibrationAmbiguous { evidence: Vec<(EquationVariant, f64)> },

    #[error("requested {requested} matrix entries exceeds the budget of {budget}")]
    OverBudget { requested: u128, budget: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNoConvergence { .. }
                | Error::SingularIntegrand { .. }
                | Error::SolverNoConvergence { .. }
                | Error::CalibrationNoMatch { .. }
                | Error::CalibrationAmbiguous { .. }
        )
    }
}

fn format_roots(roots: &[Complex64]) -> String {
    roots
        .iter()
        .map(|r| format!("{:.6}{:+.6}i (|r| = {:.6})", r.re, r.im, r.norm()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn format_table(rows: &[(EquationVariant, f64)]) -> String {
    rows.iter()
        .map(|(v, ks)| format!("{v}: ks={ks:.4}"))
        .collect::<Vec<_>>()
        .join("; ")
}
