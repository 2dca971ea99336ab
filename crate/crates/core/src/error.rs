use thiserror::Error;

use crate::linalg::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid seminorm: {0}")]
    InvalidSeminorm(String),

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `T(N^p) ⊄ N^p`; `row`/`col` are 1-based.
    #[error("operator leaks out of the null space of {seminorm}: entry ({row}, {col}) has modulus {modulus:e}")]
    NotInvariant {
        seminorm: String,
        row: usize,
        col: usize,
        modulus: f64,
    },

    #[error("operator is not quotient bounded: p̂ is infinite for seminorm {seminorm}")]
    NotQuotientBounded { seminorm: String },

    #[error("operator is not locally bounded for calibration {calibration}: no seminorm p has m_pq < ∞ for every q")]
    NotLocallyBounded { calibration: String },

    #[error("λ = {lambda} is within {distance:e} of the spectrum")]
    NearSpectrum { lambda: C64, distance: f64 },

    #[error("λ must be nonzero")]
    ZeroLambda,

    #[error("matrix is numerically singular")]
    Singular,

    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    EigenFailure { iterations: usize },
}
