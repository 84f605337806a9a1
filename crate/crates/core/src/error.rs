use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("division by zero in GF(q)")]
    DivisionByZero,
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("exhaustive check needs {needed} cover tests, budget is {budget}")]
    TooLarge { needed: u128, budget: u128 },
    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },
    #[error("invalid LU assignment: {0}")]
    InvalidAssignment(String),
    #[error("attack strategy needs a victim LU")]
    MissingVictim,
    #[error("invalid attack: {0}")]
    InvalidAttack(String),
    #[error("degenerate observation matrix")]
    DegenerateMatrix,
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed codebook file: {0}")]
    Format(String),
}
