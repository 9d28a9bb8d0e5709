use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("term {index} duplicates term {first}")]
    DuplicateTerm { index: usize, first: usize },

    #[error("term {index} has a zero direction vector")]
    ZeroDirection { index: usize },

    #[error("edge {edge}: {reason}")]
    InvalidRate { edge: usize, reason: String },

    #[error("graph is not reversible: edge {edge} ({from} -> {to}) has no reverse")]
    NotReversible { edge: usize, from: usize, to: usize },

    #[error("graph is not weakly reversible: edge {edge} ({from} -> {to}) lies on no directed cycle")]
    NotWeaklyReversible { edge: usize, from: usize, to: usize },

    #[error("graph is weakly reversible; use the embedding verifier instead")]
    WeaklyReversible,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("epsilon must lie in (0,1), got {0}")]
    EpsilonOutOfRange(f64),

    #[error("normal {index} is the zero vector")]
    ZeroNormal { index: usize },

    #[error("sign vector {0} is not realizable")]
    Unrealizable(String),

    #[error("operation requires a hyperplane-generated fan")]
    NotHyperplaneFan,

    #[error("cycle vertices {a} and {b} tie along the ordering direction")]
    OrderingTie { a: usize, b: usize },

    #[error("ordering has length {found}, cycle has {expected} vertices")]
    OrderingLength { expected: usize, found: usize },

    #[error("state coordinate {index} is not strictly positive")]
    NonPositiveState { index: usize },

    #[error("step size underflow at t = {t}: probable finite-time blow-up")]
    BlowUp { t: f64 },

    #[error("integrator failed to meet tolerance at t = {t}")]
    ToleranceFailure { t: f64 },

    #[error("regions require dimension 2, got {0}")]
    RegionDimension(usize),

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("region construction failed after {attempts} attempts: {reason}")]
    RegionBuild { attempts: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(eps))
    }
}
