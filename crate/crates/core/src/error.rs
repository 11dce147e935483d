use thiserror::Error;

pub type Result<T> = std::result::Result<T, LensError>;

#[derive(Debug, Error)]
pub enum LensError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid needs at least {min} intervals, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid exponent {value}: {reason}")]
    InvalidExponent { value: f64, reason: &'static str },

    #[error("zero-average compatibility violated: |∫h| = {integral:e} exceeds {bound:e}")]
    Compatibility { integral: f64, bound: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no bracket found: {0}")]
    NoBracket(String),

    #[error("input not normalized: ‖ψ‖₂ = {0}")]
    NotNormalized(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
