use thiserror::Error;

/// Errors produced while building chains or running the analyses.
#[derive(Debug, Error)]
pub enum BdError {
    #[error("row {row}: probabilities sum to {sum}, which deviates from 1 by more than 1e-12")]
    RowSum { row: usize, sum: f64 },

    #[error("row {row}: {which} must be strictly positive (got {value})")]
    NonPositiveRate {
        row: usize,
        which: &'static str,
        value: f64,
    },

    #[error("row {row}: {which} = {value} is not a probability")]
    OutOfRange {
        row: usize,
        which: &'static str,
        value: f64,
    },

    #[error("every self-transition probability is zero; the chain would be periodic")]
    AllZeroSelf,

    #[error("invalid tail family parameters: {0}")]
    BadFamilyParams(String),

    #[error("declared n0 = {declared} does not match prefix length {actual}")]
    PrefixLength { declared: usize, actual: usize },

    #[error("values saturated at index {index} (magnitude above 1e300)")]
    Saturated { index: usize },

    #[error("contradiction detected: {0}")]
    ContradictionDetected(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed chain document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BdError>;

impl BdError {
    /// Stable error name used on the diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            BdError::RowSum { .. } => "RowSumError",
            BdError::NonPositiveRate { .. } => "NonPositiveRate",
            BdError::OutOfRange { .. } => "OutOfRange",
            BdError::AllZeroSelf => "AllZeroSelf",
            BdError::BadFamilyParams(_) => "BadFamilyParams",
            BdError::PrefixLength { .. } => "PrefixLengthMismatch",
            BdError::Saturated { .. } => "Saturated",
            BdError::ContradictionDetected(_) => "ContradictionDetected",
            BdError::InvalidArgument(_) => "InvalidArgument",
            BdError::Parse(_) => "ParseError",
            BdError::Io(_) => "IoError",
        }
    }
}
