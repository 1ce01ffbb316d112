use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid default distribution at cell ({row}, {col}): {reason}")]
    Distribution {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("invalid default distribution: {0}")]
    DistributionSum(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("regression failed: {0}")]
    Regression(String),

    #[error("Newton solve failed on {failed} of {total} paths at step {step} (first failing path {first_path})")]
    Convergence {
        step: usize,
        failed: usize,
        total: usize,
        first_path: usize,
    },

    #[error("PDE policy iteration did not settle after {0} sweeps")]
    PolicyIteration(usize),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
