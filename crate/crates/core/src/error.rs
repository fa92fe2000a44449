use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid penalty term: {0}")]
    InvalidTerm(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("operator norm bound {0} is not below 1; renormalize the problem first")]
    NotRenormalized(f64),

    #[error("invalid penalty specification: {0}")]
    InvalidPenalty(String),

    #[error("invalid stop rule: {0}")]
    InvalidStopRule(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("operator is not injective and no nullspace basis was supplied")]
    NonInjectiveWithoutBasis,

    #[error("nullspace dimension {0} exceeds the supported maximum of 3")]
    NullspaceTooLarge(usize),

    #[error("invalid nullspace basis: {0}")]
    InvalidNullspace(String),

    #[error("operator is not diagonal")]
    NotDiagonal,

    #[error("grid oracle supports at most 2 dimensions, got {0}")]
    TooManyDimensions(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("uniqueness condition fails: {0}")]
    NotUnique(String),
}
