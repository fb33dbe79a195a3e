use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid locality: k = {k} exceeds n = {n}")]
    InvalidLocality { k: usize, n: usize },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("numeric domain error: {0}")]
    NumericDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("capacity exceeded: {what} (limit {limit})")]
    Capacity { what: String, limit: usize },
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}): {detail}")]
    Stiffness { t: f64, h: f64, detail: String },
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
