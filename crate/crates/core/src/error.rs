use thiserror::Error;

use crate::families::OrderViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("multiplier family is empty")]
    EmptyFamily,

    #[error("duplicate multiplier: members {first} and {second} are identical")]
    DuplicateMember { first: usize, second: usize },

    #[error("smoothing-parameter grid is not strictly monotone at position {0}")]
    NonMonotoneGrid(usize),

    #[error("landweber step is unstable: step * max eigenvalue = {0} > 1")]
    Unstable(f64),

    #[error("family is not ordered: {0}")]
    NotOrdered(OrderViolation),

    #[error("prior weights do not match the family: {0}")]
    MismatchedPriors(String),

    #[error("weight profile was computed from different inputs")]
    StaleProfile,

    #[error("weights are not on the simplex: {0}")]
    NotOnSimplex(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
