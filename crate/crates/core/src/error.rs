use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    Spec(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("parameter vector has length {got}, layout expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid knots: {0}")]
    Knots(String),

    #[error("value {value} outside the range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("objective could not be evaluated at the initial point")]
    InitialEvaluation,

    #[error("hessian could not be made positive definite")]
    HessianInversion,

    #[error("{0} is not available for this model")]
    Unsupported(String),

    #[error("covariance matrix of the estimates is not available")]
    NoCovariance,
}
