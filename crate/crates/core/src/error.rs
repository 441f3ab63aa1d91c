use thiserror::Error;

/// Errors raised by the geometry, operator, solver and driver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MuskatError {
    #[error("grid size {0} must be even and at least 8")]
    InvalidGrid(usize),

    #[error("grid mismatch: {0} vs {1} nodes")]
    GridMismatch(usize, usize),

    #[error("derivative order {0} outside 1..=6")]
    OrderOutOfRange(u32),

    #[error("fractional exponent {0} outside [0, 1]")]
    ExponentOutOfRange(f64),

    #[error("mollifier width must be positive, got {0}")]
    InvalidMollifier(f64),

    #[error("self-intersection: chord length {chord:e} between nodes {i} and {j}")]
    SelfIntersection { chord: f64, i: usize, j: usize },

    #[error("curves in contact: minimum distance {distance:e}")]
    CurveContact { distance: f64 },

    #[error("no convergence after {iterations} iterations (best estimate {estimate:e})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("degenerate parametrization: A(t) = {0:e}")]
    DegenerateParametrization(f64),

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, MuskatError>;
