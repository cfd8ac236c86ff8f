//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by carriers, functionals, solvers and verifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("interpolation mode not supported by this carrier: {0}")]
    UnsupportedInterpolation(&'static str),

    #[error("point outside the functional domain: {0}")]
    NotInDomain(String),

    #[error(
        "infeasible step parameters: tau={tau}, eta={eta}, lambda={lambda}; requires {requirement}"
    )]
    Infeasible {
        tau: f64,
        eta: f64,
        lambda: f64,
        requirement: String,
    },

    #[error("inner solver did not converge after {iters} iterations (residual {residual:.3e}, tolerance {tol:.3e})")]
    InnerSolve {
        iters: usize,
        residual: f64,
        tol: f64,
    },

    #[error("line search failed at iteration {iter} (residual {residual:.3e})")]
    LineSearch { iter: usize, residual: f64 },

    #[error("accepted point increases the one-step energy: {objective} > {anchor_value}")]
    EnergyIncrease { objective: f64, anchor_value: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
