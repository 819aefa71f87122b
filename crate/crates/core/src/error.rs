use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("secular function evaluated at pole d[{index}] = {pole}")]
    PoleEvaluation { index: usize, pole: f64 },

    #[error(
        "secular root {index} did not converge after {iterations} iterations (best iterate {best})"
    )]
    ConvergenceFailure {
        index: usize,
        iterations: u32,
        best: f64,
    },

    #[error("eigenvector undefined: root {root} coincides with pole d[{index}]")]
    DegenerateEigenvector { index: usize, root: f64 },

    #[error("eigenvalue collides with a pole of the derivative; perturb sigma^2 and retry")]
    PoleCollision,

    #[error("sample covariance is singular (smallest eigenvalue {smallest:e}); apply diagonal loading first")]
    SingularCovariance { smallest: f64 },

    #[error("estimator `{estimator}` does not support {what}")]
    Unsupported { estimator: String, what: String },

    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, DoaError>;

impl From<std::io::Error> for DoaError {
    fn from(e: std::io::Error) -> Self {
        DoaError::Io(e.to_string())
    }
}

impl From<csv::Error> for DoaError {
    fn from(e: csv::Error) -> Self {
        DoaError::Io(e.to_string())
    }
}
