use num_complex::Complex64;
use thiserror::Error;

use crate::Parity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("overflow in {context}")]
    Overflow { context: String },

    #[error("characteristic-value continuation lost track of the {parity} r={r} branch at q={q}")]
    ContinuationFailure {
        parity: Parity,
        r: u32,
        q: Complex64,
    },

    #[error("{what} did not converge within {attempted} terms")]
    NonConvergent { what: String, attempted: usize },

    #[error("quadrature did not converge (u_max = {u_max})")]
    Quadrature { u_max: f64 },

    #[error("non-positive determinant {det} at p = {p}: truncation or physics violation")]
    NonPositiveDeterminant { p: f64, det: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
