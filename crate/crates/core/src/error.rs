use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("entry ({row}, {col}) = {value} is not a probability")]
    NotAProbability { row: usize, col: usize, value: f64 },
    #[error("entries ({row}, {col}) and ({col}, {row}) sum to {sum}, expected 1")]
    Asymmetric { row: usize, col: usize, sum: f64 },
    #[error("diagonal entry {index} = {value}, expected 1/2")]
    Diagonal { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("separation threshold is zero; no repetition count can satisfy the target")]
    ZeroSeparation,
    #[error("comparison graph is disconnected")]
    Disconnected,
    #[error("power iteration did not converge within {iters} iterations (last change {residual:e})")]
    NotConverged { iters: usize, residual: f64 },
    #[error("log-likelihood is not finite")]
    NonFiniteLikelihood,
    #[error("invalid comparison record: {0}")]
    InvalidRecord(String),
    #[error("instance too large to enumerate: {0}")]
    TooLarge(String),
}
