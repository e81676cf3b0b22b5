use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: expected {expected} samples, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("the zero mode has no acoustic eigensystem")]
    ZeroMode,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("non-physical density: {0}")]
    NonPhysicalDensity(String),
    #[error("blow-up at t = {time}: norm {norm:.3e} exceeds ceiling {ceiling:.3e}")]
    BlowUp { time: f64, norm: f64, ceiling: f64 },
    #[error("time {time} outside coefficient path [{start}, {end}]")]
    TimeOutOfRange { time: f64, start: f64, end: f64 },
    #[error("frame system is numerically singular: {0}")]
    FrameSolve(String),
    #[error("series is not positive on the fit window")]
    NonPositiveSeries,
    #[error("not enough samples: need {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
    #[error("field has zero gradient")]
    ZeroGradient,
    #[error("decomposed part vanishes identically")]
    DegenerateDenominator,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
