use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state does not fit the truncated basis: leakage {leakage:.3e} exceeds {threshold:.1e}")]
    Truncation { leakage: f64, threshold: f64 },

    #[error("qubit index {index} out of range 1..={n_qubits}")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("quadrature did not converge: estimated error {achieved:.3e} > tolerance {tolerance:.1e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("root finding failed for {what}: target {target} outside [{low}, {high}]")]
    RootBracket {
        what: &'static str,
        target: f64,
        low: f64,
        high: f64,
    },
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::Quadrature { .. } | Error::RootBracket { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
