use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("capacity exceeded: need {needed} bits, have {available}")]
    CapacityExceeded { needed: usize, available: usize },

    #[error("embedding failed: {0}")]
    EmbedFailure(String),

    #[error("BCH decoding failed")]
    DecodeFailure,

    #[error("extraction failed: {0}")]
    ExtractionFailed(String),

    #[error("coefficient overflow at index {0}")]
    CoefficientOverflow(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
