use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid barrier: {0}")]
    InvalidBarrier(String),

    #[error("super-solution amplitude exceeded cap {cap} without a nonnegative residual")]
    GammaCap { cap: f64 },

    #[error("trajectory did not blow up before r = {r_min}")]
    NotBlowingUp { r_min: f64 },

    #[error("no shooting slope in the search bracket reaches v(r*) = {target}")]
    BracketFailure { target: f64 },

    #[error("trajectories come from different coefficient sets")]
    IncompatibleProblems,

    #[error("monotonicity of the shooting solution violated at r = {r}")]
    Monotonicity { r: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("regime error: {0}")]
    Regime(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("non-positive value {value} at delta = {delta}")]
    NonpositiveValues { delta: f64, value: f64 },
}

impl Error {
    /// Variant name, used as the error code in structured output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::Domain(_) => "Domain",
            Error::InvalidBarrier(_) => "InvalidBarrier",
            Error::GammaCap { .. } => "GammaCap",
            Error::NotBlowingUp { .. } => "NotBlowingUp",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::IncompatibleProblems => "IncompatibleProblems",
            Error::Monotonicity { .. } => "Monotonicity",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::Regime(_) => "RegimeError",
            Error::Precondition(_) => "Precondition",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::NonpositiveValues { .. } => "NonpositiveValues",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
