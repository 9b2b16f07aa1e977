use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is non-finite, negative where it must not be, or otherwise malformed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation was called outside the parameter regime it is defined for.
    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("numerical failure: {what} (residual {residual:.3e}, bound {bound:.3e})")]
    NumericalFailure {
        what: String,
        residual: f64,
        bound: f64,
    },

    /// The second-moment matrix is not positive semidefinite.
    #[error("unphysical state: smallest covariance eigenvalue {min_eigenvalue:.3e}")]
    UnphysicalState { min_eigenvalue: f64 },

    #[error("undefined moment: {0}")]
    UndefinedMoment(String),

    #[error("step size {step:.3e} exceeds the allowed maximum {max:.3e}")]
    StepTooLarge { step: f64, max: f64 },

    /// A truncated Fock-space run populated its top layer beyond the allowed leakage.
    #[error("rejected Fock-space run: top-layer population {leakage:.3e} exceeds {limit:.1e}")]
    RejectedRun { leakage: f64, limit: f64 },
}

impl Error {
    /// Whether the error stems from numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. } | Error::UnphysicalState { .. } | Error::RejectedRun { .. }
        )
    }
}
