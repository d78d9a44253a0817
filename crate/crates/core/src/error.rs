use thiserror::Error;

/// Failures reported by the geometry, flow and functional routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is off the manifold (constraint residual {residual:e})")]
    OffManifold { residual: f64 },
    #[error("sample set is empty")]
    EmptySample,
    #[error("vector is not horizontal (|eta| = {eta:e})")]
    NotHorizontal { eta: f64 },
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("function is not basic (reeb derivative {derivative:e})")]
    NotBasic { derivative: f64 },
    #[error("initial covector has no horizontal part (H = {h:e})")]
    DegenerateHamiltonian { h: f64 },
    #[error("too few steps: {got} (need at least {min})")]
    TooFewSteps { got: usize, min: usize },
    #[error("too few samples: {got} (need at least {min})")]
    TooFewSamples { got: usize, min: usize },
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("variation field is not admissible (residual {residual:e})")]
    Inadmissible { residual: f64 },
    #[error("path is not unit speed (speed deviation {deviation:e})")]
    NotUnitSpeed { deviation: f64 },
    #[error("positivity window violated at t = {t} (min factor {min_factor:e})")]
    PositivityViolated { t: f64, min_factor: f64 },
    #[error("path is not certified as minimizing")]
    NotMinimizing,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
