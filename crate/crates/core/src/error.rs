use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid base symbol {0:?}")]
    InvalidBase(char),

    #[error("strand {0} is empty")]
    EmptyStrand(usize),

    #[error("invalid secondary structure: {0}")]
    InvalidStructure(String),

    #[error("{what}: budget of {limit} exceeded (needed {needed})")]
    BudgetExceeded {
        what: &'static str,
        limit: usize,
        needed: usize,
    },

    #[error("zero raised to a negative power")]
    ZeroToNegativePower,

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("magnification {0} does not keep energies integral")]
    NonIntegralMagnification(String),

    #[error("missing parameter-table entry: {0}")]
    MissingParameter(String),

    #[error("structure is pseudoknotted under the given strand ordering")]
    Pseudoknotted,

    #[error("structure is not connected")]
    Disconnected,

    #[error("inconsistent oracle answers: {0}")]
    OracleInconsistent(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
