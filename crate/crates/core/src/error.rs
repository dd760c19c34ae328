use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The projected slow flow carries the prefactor -1/(2z) and is undefined on the fold.
    #[error("field is singular on the fold z = 0")]
    SingularAtFold,

    #[error("|{value}| < 1 lies inside the pinch region")]
    InsidePinchRegion { value: f64 },

    #[error("state lies on the switching manifold and no side was supplied")]
    UndefinedSide,

    #[error("side {requested:?} disagrees with the sign of the switching coordinate {value}")]
    SideMismatch { requested: crate::pinch::Side, value: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("parameter b = {0} is a pole of the confluent hypergeometric function")]
    KummerPole(f64),

    #[error("argument {0} is a pole of the Gamma function")]
    GammaPole(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("result overflows f64: {0}")]
    Overflow(String),

    #[error("step size underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),

    #[error("event localization failed near t = {0}")]
    EventLocalization(f64),

    #[error("forward entry into a repelling sliding region at (y, z) = ({y}, {z})")]
    RepellingEntry { y: f64, z: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("singular linear system")]
    SingularMatrix,

    #[error("junction mismatch of {0:e} between canard segments")]
    JunctionMismatch(f64),

    #[error("export failed: {0}")]
    Export(String),
}

pub type Result<T> = std::result::Result<T, Error>;
