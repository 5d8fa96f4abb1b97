use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Survival has dropped to (or below) `EPS_SURVIVAL`; hazard-type quantities are undefined.
    #[error("hazard undefined: exhausted survival at t = {t}")]
    ExhaustedSurvival { t: f64 },

    #[error("quadrature did not converge: best estimate {estimate} with error estimate {error_estimate}")]
    Convergence { estimate: f64, error_estimate: f64 },

    #[error("conditioning on null event: {0}")]
    NullConditioning(String),

    #[error("ordering violation: convolution {conv} exceeds distribution value {cdf}")]
    Ordering { conv: f64, cdf: f64 },

    #[error("grid cell {coords} failed: {source}")]
    Cell { coords: String, source: Box<Error> },

    #[error("no conditioned samples among {n_samples} draws")]
    NoConditionedSamples { n_samples: u64 },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for convergence failures, as opposed to bad inputs.
    pub fn is_convergence(&self) -> bool {
        match self {
            Error::Convergence { .. } => true,
            Error::Cell { source, .. } => source.is_convergence(),
            _ => false,
        }
    }
}
