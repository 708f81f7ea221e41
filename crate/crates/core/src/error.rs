use thiserror::Error;

use crate::lscf::BuildReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("acceptance rate too low: {accepted} points accepted after {consumed} raw candidates")]
    AcceptanceRateTooLow { accepted: usize, consumed: u64 },

    #[error("Sobol direction table supports dimensions 1..={max}, got {got}")]
    SobolDimension { max: usize, got: usize },

    #[error("PHS centers are not distinct")]
    DuplicateCenters,

    #[error("non-finite integrand sample at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("reference quadrature did not converge: error estimate {estimate:e} exceeds {tolerance:e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    #[error("rank deficient: numerical rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("weight function vanishes at point {0}")]
    ZeroWeight(usize),

    #[error("unisolvency not reached: rank < K up to N_max = {n_max}")]
    UnisolvencyNotReached { n_max: usize, report: Box<BuildReport> },

    #[error("positivity not reached: negative weights up to N_max = {n_max}")]
    PositivityNotReached { n_max: usize, report: Box<BuildReport> },

    #[error("exactness violated: residual {residual:e} exceeds bound {bound:e}")]
    ExactnessViolated { residual: f64, bound: f64 },

    #[error("numerically trivial kernel: {active} active points for K = {k}")]
    TrivialKernel { active: usize, k: usize },

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("power-law fit needs at least 3 pairs, got {0}")]
    TooFewPairs(usize),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures of the numerical procedures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnisolvencyNotReached { .. }
                | Error::PositivityNotReached { .. }
                | Error::RankDeficient { .. }
                | Error::ExactnessViolated { .. }
                | Error::QuadratureNotConverged { .. }
                | Error::TrivialKernel { .. }
                | Error::AcceptanceRateTooLow { .. }
                | Error::NonFinite(_)
                | Error::ZeroWeight(_)
        )
    }
}
