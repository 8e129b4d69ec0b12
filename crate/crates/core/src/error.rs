use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("exponential scale limit exceeded (‖tA‖₁ = {norm:e})")]
    ScaleLimit { norm: f64 },

    /// `ker(T−I) ∩ ran(T−I) ≠ {0}`: the fixed space has no complement.
    #[error("fixed space and range of T-I do not split the space (gap {gap:e})")]
    SplittingNotDirect { gap: f64 },

    #[error("Cesàro averages did not settle: ‖A_N − A_2N‖ = {certificate:e} > {tol:e} (N = {window})")]
    CesaroDivergence { window: usize, certificate: f64, tol: f64 },

    #[error("operators do not commute: defect {defect:e} > {tol:e}")]
    NotCommuting { defect: f64, tol: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("precondition violated: {what} = {defect:e} exceeds {bound:e}")]
    PreconditionViolation {
        what: &'static str,
        defect: f64,
        bound: f64,
    },

    #[error("semigroup is not periodic: ‖exp(αA) − I‖ = {defect:e} > {tol:e}")]
    NotPeriodic { defect: f64, tol: f64 },

    #[error("certificate digest does not match the supplied inputs")]
    Tamper,
}

pub type Result<T> = std::result::Result<T, Error>;
