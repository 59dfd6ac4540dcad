use thiserror::Error;

/// Errors raised by the numerical engine.
///
/// Numeric payloads are carried as `f64` so the error type does not depend
/// on the scalar parameter of the call that produced it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative requested at kink point x = {x}")]
    KinkPoint { x: f64 },

    #[error("argument outside the domain of {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("det(I {sign} K[t]) = {det:e} is numerically singular")]
    NearSingular { sign: char, det: f64 },

    #[error("condition (K5) fails at t = {t}: {reason}")]
    K5Violation { t: f64, reason: String },

    #[error("linear solve ill-conditioned at t = {t} (condition estimate {cond:e})")]
    LinearSolveFailure { t: f64, cond: f64 },

    #[error("invalid kernel specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}
