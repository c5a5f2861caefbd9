use thiserror::Error;

pub type Result<T> = std::result::Result<T, WvaError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WvaError {
    /// Pre- and post-selected states are (numerically) orthogonal, so the
    /// weak value is undefined.
    #[error("pre- and post-selected states are orthogonal (|overlap| = {overlap:e})")]
    OrthogonalSelection { overlap: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state vector has zero norm")]
    ZeroVector,

    #[error("observable is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("observable does not square to the identity (max deviation {deviation:e})")]
    NotInvolutory { deviation: f64 },

    #[error("grid truncates {mass:e} of the probe norm (limit {limit:e})")]
    TailMassTooLarge { mass: f64, limit: f64 },

    #[error("real part of the weak value is zero; the optimal probe is not normalizable")]
    ZeroRealPart,

    #[error("wavefunction has zero norm")]
    ZeroNorm,

    #[error("Gaussian shift denominator vanishes ({denominator:e})")]
    DegenerateDenominator { denominator: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl WvaError {
    /// Stable variant name, used on the command line and in CSV error columns.
    pub fn name(&self) -> &'static str {
        match self {
            WvaError::OrthogonalSelection { .. } => "OrthogonalSelection",
            WvaError::DimensionMismatch { .. } => "DimensionMismatch",
            WvaError::ZeroVector => "ZeroVector",
            WvaError::NotHermitian { .. } => "NotHermitian",
            WvaError::NotInvolutory { .. } => "NotInvolutory",
            WvaError::TailMassTooLarge { .. } => "TailMassTooLarge",
            WvaError::ZeroRealPart => "ZeroRealPart",
            WvaError::ZeroNorm => "ZeroNorm",
            WvaError::DegenerateDenominator { .. } => "DegenerateDenominator",
            WvaError::NonFinite(_) => "NonFinite",
            WvaError::InvalidGrid(_) => "InvalidGrid",
            WvaError::InvalidParameter(_) => "InvalidParameter",
        }
    }
}
