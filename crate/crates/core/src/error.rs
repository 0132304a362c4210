use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a point appears in both components")]
    DisjointnessViolation,
    #[error("repeated point within one component")]
    DuplicatePoint,
    #[error("configuration of {size} points exceeds the subset cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("unsupported dimension {0} (expected 1..=3)")]
    InvalidDimension(usize),
    #[error("non-finite coordinate")]
    NonFiniteCoordinate,
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("expected ({}, {}) points, got ({}, {})", .expected.0, .expected.1, .got.0, .got.1)]
    ArityMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid integrator settings: {0}")]
    InvalidIntegrator(String),
    #[error("quadrature unavailable: {0}")]
    QuadratureUnavailable(String),
    #[error("invalid rate parameters: {0}")]
    InvalidRateParams(String),
    #[error("kernel role {0} is not defined for this rate family")]
    MissingKernel(String),
    #[error("alpha {alpha} must lie in (0, 1/nu) = (0, {})", 1.0 / .nu)]
    InvalidAlpha { alpha: f64, nu: f64 },
    #[error("step rejected at t = {time}: component norm grew from {before} to {after}")]
    StepSizeRejected { time: f64, before: f64, after: f64 },
    #[error("population cap {cap} exceeded")]
    PopulationCapExceeded { cap: usize },
    #[error("sampled rate {rate} exceeds the declared thinning bound {bound} ({channel})")]
    ThinningBoundViolated {
        channel: &'static str,
        rate: f64,
        bound: f64,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
