//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Circular mask is unusable for the given image (center outside, radius ≤ 0, ...).
    #[error("invalid mask: {0}")]
    InvalidMask(String),

    /// Convolution window or stride violates its preconditions.
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    /// Two grids or lists that must agree in size do not.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// A value is outside the domain an operation requires.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation that needs at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Cluster extraction cannot split identical depths.
    #[error("degenerate cluster: all depth values are identical")]
    DegenerateCluster,

    /// Rotation matrix is not orthonormal with determinant +1.
    #[error("invalid rigid transform: {0}")]
    InvalidTransform(String),

    /// A file failed to parse (PGM/PNG/PLY/CSV/grid/config).
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }
}
