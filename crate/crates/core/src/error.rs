use thiserror::Error;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("qubit count {n} outside the supported range {min}..={max}")]
    QubitCount { n: usize, min: usize, max: usize },

    #[error("vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("level {level} out of range for n = {n}")]
    LevelOutOfRange { level: usize, n: usize },

    #[error("truncation bound must be positive, got {0}")]
    NonPositiveBound(f64),

    #[error("bias entry {value} at index {index} is outside [-1, 1]")]
    BiasOutOfRange { index: usize, value: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("function list must not be empty")]
    EmptyFunctionList,

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} exceeds the cap of {cap}")]
    CapExceeded { what: String, cap: usize },

    #[error("unknown hybrid id {0}")]
    InvalidHybrid(u8),

    #[error("malformed record: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    /// True when the error marks a scale boundary rather than a bad argument.
    pub fn is_cap_violation(&self) -> bool {
        match self {
            LabError::CapExceeded { .. } => true,
            LabError::QubitCount { n, max, .. } => n > max,
            _ => false,
        }
    }
}
