use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| entry = {max_asymmetry:e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0}")]
    InvalidDimension(usize),

    #[error("state vector has zero or non-finite norm")]
    ZeroNorm,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("grid too coarse at step {step}: consecutive fidelity {fidelity:.6} <= 0.5")]
    GridTooCoarse { step: usize, fidelity: f64 },

    #[error("trajectory needs at least {needed} points, has {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("curve is not closed (closure defect {defect:e} >= tolerance {tolerance:e})")]
    OpenCurve { defect: f64, tolerance: f64 },

    #[error("stationary state: {0}")]
    Stationary(String),

    #[error("geometric phase {0} outside [0, 2pi)")]
    ThetaOutOfRange(f64),

    #[error("zero energy uncertainty with nonzero geometric phase {theta}")]
    InconsistentUncertainty { theta: f64 },

    #[error("trajectory has no Hamiltonian schedule attached")]
    MissingSchedule,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("winding number for level {level} is not an integer (residual {residual:e})")]
    NonIntegerWinding { level: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
