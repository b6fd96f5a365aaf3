use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin: 2J = {two_j} (need 2J >= 1)")]
    InvalidSpin { two_j: u32 },

    #[error("state is not normalized: norm^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("dimension mismatch: expected {expected} amplitudes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("squeezing parameter undefined: <Jz> = 0")]
    UndefinedSqueezing,

    #[error("numerical failure in {context}: residual {residual:e}")]
    NumericalFailure { context: String, residual: f64 },

    #[error("x = {x} outside valid interval [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("symmetry breaking at mu = {mu}: <Jx> = {mean_jx:e}, <Jy> = {mean_jy:e}, susceptibility = {susceptibility}")]
    SymmetryBreaking {
        mu: f64,
        mean_jx: f64,
        mean_jy: f64,
        susceptibility: f64,
    },

    #[error("exact curve is not a valid lower bound for 2J = {two_j} at |x| = {x} (valid for |x| >= {valid_from}); use analytic mode")]
    Regime { two_j: u32, x: f64, valid_from: f64 },

    #[error("root bracket failure: {0}")]
    Bracket(String),

    #[error("invalid record field `{field}`: {reason}")]
    InvalidRecord { field: String, reason: String },

    #[error("record carries standard errors; an explicit margin policy is required")]
    MarginPolicyRequired,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. } | Error::SymmetryBreaking { .. } | Error::Bracket(_)
        )
    }
}
