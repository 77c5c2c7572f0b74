use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh validation failed at element {element} (line {line}): {message}")]
    Validation {
        element: usize,
        line: usize,
        message: String,
    },

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("unsupported quadrature exactness {0} (maximum 20)")]
    UnsupportedExactness(usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: String, found: String },

    #[error("coefficient error: {0}")]
    Coefficient(String),

    #[error("assembly paths disagree: relative difference {difference:e} exceeds {tolerance:e} ({form})")]
    PathMismatch {
        form: &'static str,
        difference: f64,
        tolerance: f64,
    },

    #[error(
        "singular or near-singular system (possible resonance): pivot {pivot} of {size} has relative size {relative:e} < {threshold:e}"
    )]
    Resonance {
        pivot: usize,
        size: usize,
        relative: f64,
        threshold: f64,
    },

    #[error("internal linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("dense eigenproblem of size {size} exceeds the cap of {cap}")]
    SizeGuard { size: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
