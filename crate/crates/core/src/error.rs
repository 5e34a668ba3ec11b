use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite field")]
    NonFiniteField,
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("eigensolver inconsistency: {0}")]
    EigensolverInconsistency(String),
    #[error("parameter relation violated: {0}")]
    ParameterRelationViolated(String),
    #[error("resonant Robin coefficient: {0}")]
    ResonantRobin(String),
    #[error("Robin resonance at mode {mode}: normalized denominator {denominator:e}")]
    RobinResonance { mode: usize, denominator: f64 },
    #[error("Φ positivity fails: {0}")]
    PhiPositivity(String),
    #[error("log domain: u² is not positive at interior node ({i}, {j})")]
    LogDomain { i: usize, j: usize },
    #[error("solver did not converge: residual {residual:e}")]
    SolverNonConvergence { residual: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("positivity violated: undershoot {undershoot:e} exceeds clip tolerance")]
    PositivityViolated { undershoot: f64 },
    #[error("past blow-up time: t = {t} ≥ T* = {t_star}")]
    PastBlowupTime { t: f64, t_star: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
