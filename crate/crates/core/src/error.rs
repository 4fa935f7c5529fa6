use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared across the crate. Numeric payloads are widened to
/// `f64` so the error type stays independent of the scalar parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step {step} does not divide {what} = {value}")]
    Misaligned { step: f64, what: &'static str, value: f64 },

    #[error("solution escaped the bound |x| <= {bound} at t = {time}")]
    Escape { time: f64, bound: f64 },

    #[error("query time {time} outside trajectory coverage [{start}, {end}]")]
    OutOfCoverage { time: f64, start: f64, end: f64 },

    #[error("query time {time} is not within half a step of a grid node")]
    OffGrid { time: f64 },

    #[error("discriminant 4c - b^2 = {0} is not positive; closed form unavailable")]
    NonPositiveDiscriminant(f64),

    #[error("closed form singular at t = {time}: {reason}")]
    Singular { time: f64, reason: &'static str },

    #[error("degenerate angle: sin(pT/2 - 2p*eps) = {0}")]
    DegenerateAngle(f64),
}

/// An iteration that stopped part way, carrying every value produced
/// before the failing period.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("iteration aborted in period {period}: {source}")]
pub struct PartialRun<T> {
    pub completed: Vec<T>,
    pub period: usize,
    #[source]
    pub source: Error,
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
