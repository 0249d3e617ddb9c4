use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("transverse mode k={k} is out of range for {bc} conditions ({reason})")]
    ModeOutOfRange { k: usize, bc: &'static str, reason: String },
    #[error("transverse grid too coarse: {points} points for {modes} modes (need at least {required})")]
    TransverseUnderResolved { points: usize, modes: usize, required: usize },
    #[error("P0 projection is not defined under Dirichlet conditions")]
    ProjectionUndefined,
    #[error(
        "damping depends on the transverse variable (max deviation {deviation:e}); \
         mode decoupling requires a = a(x)"
    )]
    TransverseDamping { deviation: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular or near-singular solve at pivot {pivot} (condition estimate {condition:e})")]
    Singular { pivot: usize, condition: f64 },
    #[error("linear solve failed for mode {mode} with dt={dt}: {reason}")]
    StepSolve { mode: usize, dt: f64, reason: String },
    #[error("solve residual {residual:e} exceeds {tolerance:e} (condition estimate {condition:e})")]
    Residual { residual: f64, tolerance: f64, condition: f64 },
    #[error("power iteration did not converge after {iterations} iterations (last relative change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("heat window too small: leaked kernel mass {mass:e} exceeds {limit:e}")]
    WindowTooSmall { mass: f64, limit: f64 },
    #[error("hypothesis violated: {}", .0.join("; "))]
    Hypothesis(Vec<String>),
    #[error("fit window {lo}..{hi} contains {points} samples (need at least {required})")]
    FitWindow { lo: f64, hi: f64, points: usize, required: usize },
    #[error("non-positive sample {value:e} at t={t} in a logarithmic fit")]
    NonPositive { t: f64, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
