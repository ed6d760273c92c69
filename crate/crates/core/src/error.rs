use thiserror::Error;

/// Errors raised by the geometric constructions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector is not null: (v, v) = {residual:e} relative to |v|^2")]
    NotNull { residual: f64 },

    #[error("zero vector cannot represent a line")]
    ZeroVector,

    #[error("degenerate pair: (x, y) = {pairing:e}, the lines are not complementary")]
    SingularPair { pairing: f64 },

    #[error("points are not concircular (rank/signature test failed)")]
    NotConcircular,

    #[error("subspace is degenerate for the ambient metric")]
    DegenerateSubspace,

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("degenerate vertex ({i}, {j}): {reason}")]
    Degenerate { i: usize, j: usize, reason: String },

    #[error("connection is not flat: worst defect {defect:e} at {location}")]
    NotFlat { defect: f64, location: String },

    #[error("singular configuration at {location}: {reason}")]
    Singular { location: String, reason: String },

    #[error("parameter t = {t} hits the pole of edge {edge}")]
    Pole { t: f64, edge: String },

    #[error("numerical derivative unstable: {0}")]
    NumericalDerivative(String),

    #[error("not isothermic: {0}")]
    NotIsothermic(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
