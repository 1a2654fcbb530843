use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("grid too coarse along {axis}: {n} samples, need at least {min}")]
    GridTooCoarse { axis: &'static str, n: usize, min: usize },

    #[error("epsilon must be positive and finite, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("field contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("degenerate jump: a_plus == a_minus == {0}")]
    DegenerateJump(f64),

    #[error("jump-cost formulas disagree: first form {first}, second form {second}")]
    FormulaDisagreement { first: f64, second: f64 },

    #[error("defect segment {index} is inadmissible: {reason}")]
    InadmissibleSegment { index: usize, reason: String },

    #[error("profile left [0,1] by {excursion:e} at t = {t}; refine the step (currently {step})")]
    StepTooLarge { step: f64, t: f64, excursion: f64 },

    #[error("grid frame does not match the jump normal")]
    FrameMismatch,

    #[error("heat-equation data must be strictly positive (found {value} at x = {x}, z = {z})")]
    NonPositivePhi { value: f64, x: f64, z: f64 },

    #[error("boundary rows violate the pinned cell constraint (max deviation {0:e})")]
    BoundaryViolation(f64),

    #[error("quadrature too coarse: {got} points, need at least {need}")]
    QuadratureTooCoarse { got: usize, need: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
