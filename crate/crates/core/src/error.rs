use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {n} exceeds the configured limit {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("element is Grassmann-odd")]
    GrassmannOdd,

    #[error("element has a nonzero scalar part; exp_nilpotent needs a nilpotent argument")]
    ScalarPart,

    #[error("matrix is not antisymmetric")]
    NotAntisymmetric,

    #[error("matrix dimension {0} is odd")]
    OddDimension(usize),

    #[error("invalid tensor order p={p} for dimension n={n}: {reason}")]
    InvalidOrder { p: usize, n: usize, reason: &'static str },

    #[error("invalid index tuple {0:?}")]
    InvalidIndex(Vec<usize>),

    #[error("invalid coupling pattern {0:?}")]
    InvalidPattern(Vec<u8>),

    #[error("invalid preset: {0}")]
    InvalidPreset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("argument {x} outside the support ({lo}, {hi})")]
    OutsideSupport { x: f64, lo: f64, hi: f64 },

    #[error("hypergeometric lower parameter {0} is a non-positive integer")]
    HypergeometricPole(f64),

    #[error("series did not reach tolerance: bound {bound:e} after {terms} terms")]
    SeriesTolerance { bound: f64, terms: usize },

    #[error("root finder did not converge: {failed} of {total} roots above tolerance")]
    RootsNotConverged { failed: usize, total: usize },

    #[error("continuation crossed the branch point near z={0}")]
    BranchPoint(String),

    #[error("Newton iteration diverged: {0}")]
    NewtonDivergence(String),

    #[error("flow failure: {0}")]
    Flow(String),

    #[error("no bracketing interval: {0}")]
    NoBracket(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("zero standard error with nonzero gap in coefficient {0}")]
    ZeroStderr(usize),

    #[error("empty input")]
    EmptyInput,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SeriesTolerance { .. }
                | Error::RootsNotConverged { .. }
                | Error::BranchPoint(_)
                | Error::NewtonDivergence(_)
                | Error::Flow(_)
                | Error::NoBracket(_)
                | Error::Quadrature(_)
        )
    }
}
