//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by geometric computations.
///
/// Domain and precondition violations are reported with enough context
/// (sample index, parameter value, coordinates) to locate the offending
/// input point.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown built-in `{0}`")]
    UnknownBuiltin(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point:?} outside metric domain ({context})")]
    DomainViolation { point: Vec<f64>, context: String },

    #[error("metric singular at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("finite-difference stencil leaves metric domain near {point:?}")]
    StencilOutOfDomain { point: Vec<f64> },

    #[error("curve not regular: vanishing speed at sample {index} (t = {t})")]
    NotRegular { index: usize, t: f64 },

    #[error("curve not unit-speed: max |<T,T>-1| = {defect:.3e} at sample {index}")]
    NotUnitSpeed { index: usize, defect: f64 },

    #[error("Frenet order changes across the grid near sample {index} (s = {s}): order {low} vs {high}")]
    OrderChange {
        index: usize,
        s: f64,
        low: usize,
        high: usize,
    },

    #[error("vector field vanishes at {point:?}")]
    ZeroField { point: Vec<f64> },

    #[error("division by a vanishing quantity: {what} at sample {index}")]
    VanishingQuantity { what: String, index: usize },

    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    #[error("infeasible synthesis input: {0}")]
    Infeasible(String),

    #[error("ODE integration failed: {0}")]
    OdeFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
