use thiserror::Error;

/// Errors produced by the spiderlab library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("size limit exceeded: {what} ({count} > cap {cap})")]
    Size { what: String, count: usize, cap: usize },

    #[error("vertex not found: {0}")]
    NotFound(String),

    #[error("invalid address `{0}`")]
    Address(String),

    #[error("invalid network: {0}")]
    Network(String),

    #[error("configuration {config} violates the rule: {reason}")]
    RuleViolation { config: String, reason: String },

    #[error("state {0} is absorbing (zero exit rate)")]
    Absorbing(String),

    #[error("chain is not reversible: cycle {cycle} has rate-product mismatch {mismatch:e}")]
    NonReversible { cycle: String, mismatch: f64 },

    #[error("linear system is singular or disconnected: {0}")]
    Singular(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("target set unreachable from states: {0:?}")]
    Unreachable(Vec<String>),

    #[error("partition is not lumpable: {0}")]
    NotLumpable(String),

    #[error("factor chain is reducible: components {0:?}")]
    Reducible(Vec<Vec<String>>),

    #[error("state {0} is frozen: no admissible moves")]
    Frozen(String),

    #[error("height functional undefined: {0}")]
    Height(String),

    #[error("truncation: {0}")]
    Truncation(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
