use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal residual {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mark atom {index} has negative or non-finite weight {weight}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("mark atom {index} is the zero vector")]
    ZeroMark { index: usize },
    #[error("regularity budget is not finite: {0}")]
    InfiniteBudget(String),
    #[error("invalid comparison problem: {0}")]
    InvalidProblem(String),
    #[error("initial states are not ordered: {0}")]
    Unordered(String),
    #[error("affine coefficients disagree with black-box evaluation at {0}")]
    AffineMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid step h = {h} for horizon length {span}")]
    InvalidStep { h: f64, span: f64 },
    #[error("invalid horizon [{t0}, {t_end}]")]
    InvalidHorizon { t0: f64, t_end: f64 },
    #[error("non-finite state encountered at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("driver realization does not match the model: {0}")]
    DriverMismatch(String),
    #[error("path count must be at least 1")]
    NoPaths,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error("one-dimensional corollary requires m = 1, got m = {0}")]
    DimensionError(usize),
    #[error("variant precondition failed: {0}")]
    VariantPreconditionError(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("analytic {what} disagrees with finite differences at t = {t}: {analytic} vs {numeric}")]
    DerivativeMismatch {
        what: &'static str,
        t: f64,
        analytic: f64,
        numeric: f64,
    },
    #[error("smoothing width must be positive, got {0}")]
    InvalidEta(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsdError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("order mismatch: {0}")]
    OrderMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
