use thiserror::Error;

use crate::parser::ParseDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Evaluation left the real-analytic domain of a node.
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },

    #[error("coordinate {name} is not defined in a space with m={m}, k={k}")]
    CoordinateOutOfRange { name: String, m: usize, k: usize },

    #[error("expression uses {dim} coordinates; at most {max} are supported")]
    TooManyDimensions { dim: usize, max: usize },

    #[error(transparent)]
    Parse(#[from] ParseDiagnostics),

    #[error("unknown catalog key `{0}`")]
    UnknownCatalogKey(String),

    #[error("inadmissible parameters for `{key}`: {constraint}")]
    Inadmissible { key: String, constraint: String },

    #[error("missing parameter `{name}` for `{key}`")]
    MissingParameter { key: String, name: String },

    #[error("quadrature budget exceeded: {needed} nodes requested, budget {budget} (partial value {partial})")]
    BudgetExceeded {
        needed: usize,
        budget: usize,
        partial: f64,
    },

    #[error("epsilon ladder did not converge: {0}")]
    NonConvergence(String),

    #[error("test function support violation: {0}")]
    SupportViolation(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
}
