//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("domain error at x = {point}: {message}")]
    Domain { point: f64, message: String },

    #[error("quadrature failed on [{lo}, {hi}]: achieved error estimate {achieved:e} above tolerance {tolerance:e}")]
    Quadrature {
        lo: f64,
        hi: f64,
        achieved: f64,
        tolerance: f64,
    },

    #[error("integration failed on [{lo}, {hi}]: {message}")]
    Integration { lo: f64, hi: f64, message: String },

    #[error("conditioning failure: {message} (condition number {cond:e})")]
    Conditioning { message: String, cond: f64 },

    #[error("invalid {what}: {}", details.join("; "))]
    Invalid { what: String, details: Vec<String> },

    #[error("{lambda} is not an eigenvalue: boundary kernel is trivial")]
    NotAnEigenvalue { lambda: num_complex::Complex64 },

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(what: &str, details: Vec<String>) -> Self {
        Error::Invalid {
            what: what.to_string(),
            details,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
