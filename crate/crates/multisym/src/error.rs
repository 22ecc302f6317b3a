use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree mismatch: {msg}")]
    DegreeMismatch { msg: String },

    #[error("point too close to the domain boundary for a centered stencil (axis {axis}, clearance {needed:e})")]
    BoundaryClearance { axis: usize, needed: f64 },

    #[error("point outside the charted domain (axis {axis})")]
    OutOfDomain { axis: usize },

    #[error("Hamiltonian function is not admissible: Z(H) = {value} (expected 1)")]
    NotAdmissible { value: f64 },

    #[error("variation is not compactly supported inside the integration box")]
    UnsupportedVariation,

    #[error("integration box is not compactly contained in the section domain")]
    BoxNotContained,

    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "solver failed to converge after {iterations} iterations (last residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
