use thiserror::Error;

use crate::model::PeakonState;

pub type Result<T, E = PeakonError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum PeakonError {
    /// Positions not strictly decreasing, non-finite input, or a gap below the admissible minimum.
    #[error("point outside the ordered domain: {0}")]
    OutOfDomain(String),

    #[error("metric inverse residual {residual:.3e} exceeds tolerance (too close to the singular set)")]
    SingularMatrix { residual: f64 },

    #[error("wrong number of peaks: expected {expected}, got {got}")]
    WrongArity { expected: &'static str, got: usize },

    #[error("finite-difference step {step:e} too large for minimum gap {min_gap:e}")]
    StepTooLarge { step: f64, min_gap: f64 },

    #[error("position magnitude {0} would overflow the exponential terms")]
    Overflow(f64),

    #[error("plane vectors are linearly dependent")]
    DegeneratePlane,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("momentum signs do not satisfy the collision condition p1 < 0 < p2")]
    NotColliding,

    #[error("degenerate collision bound: 2H1 - H0^2 = {0:e}")]
    Degenerate(f64),

    #[error("momentum p{index} is zero; the state is a lower-order peakon", index = .index + 1)]
    OnBoundary { index: usize },

    #[error("closed-form eigenvalue {value} failed the eigenvector residual check ({residual:e})")]
    EigenResidual { value: f64, residual: f64 },

    #[error("geodesic left the domain at t = {t} before reaching the requested time")]
    LeftDomain { t: f64, partial: Box<PeakonState> },

    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64, partial: Box<PeakonState> },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
