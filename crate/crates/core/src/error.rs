use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("point lies on the singular set of `{0}`")]
    SingularPoint(String),

    #[error("expression `{0}` is not holomorphic")]
    NotHolomorphic(String),

    #[error("vector field does not vanish at the origin (|V(0)| = {0:e})")]
    NonZeroAtOrigin(f64),

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("boundary sampling exhausted after {attempts} rays ({found} points found)")]
    SamplingExhausted { attempts: usize, found: usize },

    #[error("degenerate gradient (|grad r| = {0:e})")]
    DegenerateGradient(f64),

    #[error("inverse map mismatch (round-trip error {0:e})")]
    InverseMismatch(f64),

    #[error("flow diverged before reaching t = {0}")]
    DivergedBeforeT(f64),

    #[error("base map inversion failed: {0}")]
    BaseMapInversionFailure(String),

    #[error("empty filtering window (r_s = {0:e})")]
    EmptyWindow(f64),

    #[error("point outside the unit disc: {0}")]
    OutsideDisc(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
