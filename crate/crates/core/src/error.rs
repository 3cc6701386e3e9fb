use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis is not unimodular: |det - 1| = {0:.3e}")]
    NotUnimodular(f64),

    #[error("basis is singular or too badly conditioned to enumerate")]
    SingularBasis,

    #[error("enumeration exceeded the candidate cap of {cap}")]
    EnumerationCap { cap: u64 },

    #[error("integer overflow while tracking the unimodular transform")]
    IntegerOverflow,

    #[error("flow exponent {0:.3} exceeds the overflow guard of {guard}", guard = crate::flow::EXPONENT_GUARD)]
    FlowOverflow(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("excursion not yet defined: {0}")]
    NotYetInRange(String),

    #[error("no excursion at t = {0}: delta = {1:.6} < r(t) = {2:.6}")]
    NoExcursion(f64, f64, f64),

    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
