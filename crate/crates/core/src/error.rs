use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("covariance not positive semidefinite: leading minor {minor} failed (pivot {pivot:e}) after {jitter_attempts} jitter attempts")]
    CovarianceNotPsd {
        /// 1-based order of the first leading minor whose pivot was not positive.
        minor: usize,
        pivot: f64,
        jitter_attempts: usize,
    },

    #[error("paths live on different grids")]
    GridMismatch,

    #[error("epsilon {eps} is not an admissible multiple of the mesh {mesh}")]
    EpsilonNotNodeMultiple { eps: f64, mesh: f64 },

    #[error("lag intervals differ: {0}")]
    LagMismatch(String),

    #[error("atom at {loc} is not on a lag node")]
    OffNodeAtom { loc: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("quadratic variation certification failed: estimated [X]_T = {estimated}, expected {expected}")]
    QvCertification { estimated: f64, expected: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
