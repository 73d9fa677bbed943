use thiserror::Error;

/// Failure categories, used by front-ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input or configuration.
    Config,
    /// Input violates a mathematical precondition (y < δ, M0 ≤ 0, ...).
    Domain,
    /// A numerical method failed or lost accuracy.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("substitution rule for {target} mentions its own left side")]
    SubstitutionCycle { target: String },

    #[error("no differential-polynomial antiderivative exists for {expr}")]
    NotExact { expr: String },

    #[error("t-derivative order exceeds 1 for generator {generator}")]
    TimeOrderExceeded { generator: String },

    #[error("recursion step for u_{index} is nonlocal: {relation}")]
    NonlocalStep { index: usize, relation: String },

    #[error("expansion order N={have} is too small, need N >= {need}")]
    InsufficientOrder { have: usize, need: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("Riccati seed invalid at x={x}: tail not flat ({detail})")]
    SeedInvalid { x: f64, detail: String },

    #[error("solution blew up near x={x}")]
    BlowUp { x: f64 },

    #[error("time step {dt} violates stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("poles {i} and {j} collided at x={x}")]
    Collision { i: usize, j: usize, x: f64 },

    #[error("tail of |V| too heavy: remaining mass {mass:e} exceeds {tol:e}")]
    TailTooFat { mass: f64, tol: f64 },

    #[error("Wronskian drift {drift:e} exceeds {tol:e}")]
    WronskianDrift { drift: f64, tol: f64 },

    #[error("degenerate Weyl difference at x={x}")]
    Degenerate { x: f64 },

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("self-check failed: {0}")]
    CheckFailed(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain(_) | Error::Degenerate { .. } => ErrorClass::Domain,
            Error::UnsupportedFormat(_)
            | Error::Parse(_)
            | Error::InvalidArgument(_)
            | Error::ShapeMismatch(_)
            | Error::InsufficientOrder { .. } => ErrorClass::Config,
            _ => ErrorClass::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
