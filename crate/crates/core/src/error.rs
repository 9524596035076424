use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: {msg}")]
    Domain { op: &'static str, msg: String },
    #[error("pole of {what} at lambda = {lambda}")]
    Pole { what: &'static str, lambda: Complex64 },
    #[error("resonance: 4l(l - i lambda) vanishes at l = {ell}")]
    Resonance { ell: usize },
    #[error("multiplier is not Weyl symmetric (deviation {deviation:e})")]
    NotWeylSymmetric { deviation: f64 },
    #[error("declared analytic strip {available} is narrower than the required shift {required}")]
    InsufficientStrip { available: f64, required: f64 },
    #[error("piece {piece} is not defined at this point: {region}")]
    Region { piece: String, region: String },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("divergent integral: {0}")]
    Divergence(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain { op, msg: msg.into() }
}
