//! Error type shared across the crate.

/// Errors reported by toolkit operations.
#[derive(Debug, thiserror::Error)]
pub enum SartError {
    /// Grid construction or grid parameters violate an invariant.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// An argument is out of range or inconsistent with the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// A computation produced or received non-finite values.
    #[error("non-finite values: {0}")]
    NonFinite(String),
    /// File contents do not match the expected field format.
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SartError>;

impl SartError {
    /// Process exit code for the CLI: validation problems exit 2,
    /// non-finite numerics exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            SartError::NonFinite(_) => 3,
            _ => 2,
        }
    }
}
