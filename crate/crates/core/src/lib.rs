pub mod bessel;
pub mod casimir;
pub mod characteristic;
pub mod cli;
pub mod coefficients;
pub mod diagnostics;
pub mod error;
pub mod mathieu;
pub mod parse;
pub mod quadrature;

pub use error::{Error, Result};

/// Even (cosine-type) or odd (sine-type) family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}
