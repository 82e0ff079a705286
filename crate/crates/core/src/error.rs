use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {found} usable nodes in window, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },

    #[error("nonpositive sample {value} at node {index}")]
    NonpositiveSample { index: usize, value: f64 },

    #[error("grid mismatch")]
    GridMismatch,

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("regime refusal: {0}")]
    RegimeRefusal(String),

    #[error("not a subsolution at node {index} (defect {defect:e})")]
    NotASubsolution { index: usize, defect: f64 },

    #[error("not a supersolution at node {index} (defect {defect:e})")]
    NotASupersolution { index: usize, defect: f64 },

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("infeasible bracket: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
