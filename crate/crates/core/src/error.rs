use thiserror::Error;

/// Errors produced by the vine toolkit.
#[derive(Debug, Error)]
pub enum VineError {
    /// A copula parameter lies outside its family's admissible range.
    #[error("parameter domain: {0}")]
    ParameterDomain(String),

    /// Input data violates a precondition (constant column, out-of-range
    /// values, too few observations).
    #[error("data domain: {0}")]
    DataDomain(String),

    /// Array or structure dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A numeric routine failed to converge or produced a singular system.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An edge set does not connect all nodes.
    #[error("graph not connected: {0}")]
    Disconnected(String),

    /// A serialized model file is malformed or internally inconsistent.
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, VineError>;
