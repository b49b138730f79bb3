use thiserror::Error;

/// Errors raised by the solver and its oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs disagree on dimensions or violate a model invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// An exact oracle refused an instance above its enumeration bound.
    #[error("instance too large for {oracle}: {size} exceeds bound {bound}")]
    TooLarge {
        oracle: &'static str,
        size: f64,
        bound: f64,
    },

    /// A metric is undefined for the given scenario (e.g. a zero denominator).
    #[error("degenerate scenario: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
