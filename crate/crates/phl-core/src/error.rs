use thiserror::Error;

/// Errors raised by the core algebra and geometry layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("determinant must be 1, found {0}")]
    DeterminantNotOne(f64),
    #[error("lift is not on the quadric: q(z,z) = {0}")]
    NotOnQuadric(f64),
    #[error("vector is not q-isotropic: |q(z,z)| = {0}")]
    NotIsotropic(f64),
    #[error("degenerate flag input: an idempotent part vanishes")]
    DegenerateFlag,
    #[error("tangent vectors have different base points")]
    BaseMismatch,
    #[error("frame is not orthonormal (defect {0})")]
    NotOrthonormal(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
