use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("heat kernel needs {needed} modes at t = {t}, but the truncation cap is {cap}")]
    TruncationTooSmall { t: f64, needed: usize, cap: usize },

    #[error("Green kernel is singular at coincident points on {model}")]
    SingularGreenKernel { model: &'static str },

    #[error("graph is disconnected: {0}")]
    Disconnected(String),

    #[error("vector is not zero-sum (sum {sum:e}, tolerance {tol:e})")]
    NotZeroSum { sum: f64, tol: f64 },

    #[error("singular principal block: {0}")]
    SingularBlock(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("Voronoi cell {cell} received no probe points")]
    EmptyCell { cell: usize },

    #[error("gap-error table cannot certify any bandwidth level")]
    UncertifiedSchedule,

    #[error("transport problem is infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
