use thiserror::Error;

/// Errors raised across the optimization toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("declared discrete product {declared} exceeds enumeration cap {cap}")]
    CapExceeded { declared: u128, cap: u128 },

    #[error("continuous imputation ratio undefined: the space has no continuous variables")]
    DivisionDegenerate,

    #[error("valid discrete set is empty")]
    EmptyValidSet,

    #[error("need at least {needed} training points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("kernel matrix not positive definite even with jitter {jitter:e}")]
    SingularKernel { jitter: f64 },

    #[error("no viable points in the archive")]
    NoViablePoints,

    #[error("design vector is not a repaired vector of problem {0}")]
    InvalidVector(String),

    #[error("unknown problem: {0}")]
    UnknownProblem(String),

    #[error("invalid strategy {text:?}: {reason}")]
    InvalidStrategy { text: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sobol dimension {0} exceeds the supported maximum")]
    SobolDimension(usize),

    #[error("io error: {0}")]
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

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
