use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("graph is disconnected: components {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("graph spectrally degenerate: no eigenvalue of B0^T B0 above {tol:e}")]
    SpectrallyDegenerate { tol: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite evaluation at t={t}, x={x:?}")]
    NonFinite { x: Vec<f64>, t: f64 },

    #[error("singular Hessian for agent {agent} at t={t}")]
    SingularHessian { agent: usize, t: f64 },

    #[error("Newton solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("initial state violates the auxiliary-variable contract: {0}")]
    InitContract(String),

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("trajectory diverged at step {step}")]
    Diverged { step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
