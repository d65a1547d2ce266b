use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: achieved error bound {achieved:e} > tolerance {tolerance:e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("ODE integration failed at r = {at}: {reason}")]
    OdeStep { at: f64, reason: String },

    #[error("point {0:?} is a singular point of the field")]
    Singular(Vec<f64>),

    #[error("density estimate did not converge: successive estimates {0} and {1}")]
    DensityNotConverged(f64, f64),

    #[error("degenerate fitting stencil at vertex {vertex}: {reason}")]
    DegenerateStencil { vertex: usize, reason: String },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("mesh rejected: {0}")]
    Mesh(String),

    #[error("sweepout rejected: {0}")]
    Sweepout(String),

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
