use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid of size {got} is too small, need at least {needed} points")]
    DomainTooSmall { needed: usize, got: usize },
    #[error("index {index} is outside the grid of size {m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("invalid interval [{a}, {b}] on a grid of size {m}")]
    InvalidInterval { a: usize, b: usize, m: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("code construction failed after {attempts} attempts, best off-diagonal {best_offdiag}")]
    ConstructionFailed { attempts: usize, best_offdiag: f64 },
    #[error("corrupt basis: {0}")]
    CorruptBasis(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unknown action index {0}")]
    UnknownAction(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("exact expansion overflows at degree {degree}")]
    DegreeTooLarge { degree: usize },
    #[error("loss {loss} is not convex 1-Lipschitz at action {action}: {reason}")]
    IneligibleLoss { loss: String, action: usize, reason: String },
    #[error("weak learner margin is degenerate (rho = sigma = {0})")]
    DegenerateMargin(f64),
    #[error("iteration cap {cap} exceeded; potential trace tail {trace:?}")]
    IterationCap { cap: usize, trace: Vec<f64> },
    #[error("default sample size {needed:e} exceeds the budget {budget:e}; pass an explicit sample count")]
    SampleBudget { needed: f64, budget: f64 },
    #[error("family mismatch: {0}")]
    FamilyMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;
