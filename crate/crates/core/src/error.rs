//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("box extent {extent} along axis {axis} is not an integer multiple of cell size {cell} (residual {residual:e})")]
    NonIntegralTiling {
        axis: usize,
        extent: f64,
        cell: f64,
        residual: f64,
    },

    #[error("strut {strut} is degenerate: endpoints coincide")]
    DegenerateStrut { strut: usize },

    #[error("invalid value for {what}: {value} (expected {expected})")]
    InvalidParameter {
        what: String,
        value: f64,
        expected: String,
    },

    #[error("point ({x}, {y}, {z}) lies outside the control prism box")]
    OutOfPrism { x: f64, y: f64, z: f64 },

    #[error("{value} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("mesh is not usable: {reason}")]
    BadMesh { reason: String },

    #[error("projection of joint {joint} onto the shell did not converge within tolerance (distance {distance:e}, tol {tol:e})")]
    ProjectionFailed { joint: usize, distance: f64, tol: f64 },

    #[error("stiffness factorisation failed: {hint}")]
    Singular { hint: String },

    #[error("sensitivity filter support of cell {cell} is empty; filter radius must be at least one cell size")]
    EmptyFilterSupport { cell: usize },

    #[error("objective or constraint callback produced a non-finite value at iteration {iter}")]
    NonFiniteCallback { iter: usize },

    #[error("invalid model: {reason}")]
    InvalidModel { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
