use thiserror::Error;

/// Errors produced by the numerical and quantum-information layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrand returned NaN or an infinity.
    #[error("integrand is not finite at q = {abscissa:e}")]
    NonFinite { abscissa: f64 },

    /// Adaptive quadrature spent its evaluation budget before reaching tolerance.
    #[error(
        "quadrature did not converge: value {value:e}, error estimate {abs_error:e} \
         after {evaluations} evaluations (tolerance {abs_tol:e})"
    )]
    NotConverged {
        value: f64,
        abs_error: f64,
        evaluations: usize,
        abs_tol: f64,
    },

    /// Input to the Hermitian eigensolver was not Hermitian.
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    /// A state or matrix failed a physical validity check.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Matrix dimensions do not fit the requested operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An analytic identity was violated; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad arguments).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::NotConverged { .. } | Error::Internal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
