use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("integer overflow computing {context}")]
    Overflow { context: String },

    #[error("sphere dimension must be at least 1, got {0}")]
    InvalidDimension(u32),

    #[error("degree {degree} exceeds evaluator maximum {max_degree}")]
    DegreeOutOfRange { degree: usize, max_degree: usize },

    #[error("dimension mismatch: expected ambient dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("point set must contain at least {required} points, got {actual}")]
    TooFewPoints { required: usize, actual: usize },

    #[error("point {index} has norm {norm} too far from 1 to renormalize")]
    NotOnSphere { index: usize, norm: f64 },

    #[error("point set contains coincident points (separation is zero)")]
    DegenerateSeparation,

    #[error(
        "insufficient points for any certification route: N = {n} < dim(P_t) = {dim_pt}"
    )]
    InsufficientPoints { n: usize, dim_pt: usize },

    #[error("non-finite value encountered during {context}")]
    NonFinite { context: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn overflow(context: impl Into<String>) -> Self {
        Error::Overflow {
            context: context.into(),
        }
    }
}
