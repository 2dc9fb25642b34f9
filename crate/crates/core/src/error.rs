use thiserror::Error;

/// Errors raised by the simulator.
///
/// Physical non-convergence near an instability is *not* an error: scans
/// report it through [`crate::fock::SolveReport::converged`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("the explicit-couplings model has no radial form; {0}")]
    UnsupportedVariant(String),

    #[error("geometry is degenerate: atoms {0} and {1} coincide")]
    DegenerateGeometry(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The quadratic vibrational Hamiltonian is unbounded below.
    #[error("unstable: {0}")]
    Unstable(String),

    /// Exactly at a critical coupling, where the closed forms diverge.
    #[error("at the critical point: {0}")]
    CriticalBoundary(String),

    #[error("Fock space too large: {estimated} basis states exceed the budget of {budget}")]
    ResourceExceeded { estimated: u128, budget: usize },

    #[error("eigensolver did not converge after {iterations} matrix-vector products (best estimate {best_estimate}, residual {residual:e})")]
    NotConverged {
        iterations: usize,
        best_estimate: f64,
        residual: f64,
    },

    #[error("index {index} out of range for {len} modes")]
    ModeOutOfRange { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
