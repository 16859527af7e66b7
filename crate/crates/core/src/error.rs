use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("point outside domain: {0}")]
    Domain(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("value matrix must be square with entries strictly inside (0, 1)")]
    InvalidValues,
    #[error("weights must be positive and finite")]
    InvalidWeights,
    #[error("invalid density segments: {0}")]
    InvalidDensity(String),
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("covering is not flagged sparse; apply sparsify first")]
    NotSparse,
    #[error("projection undefined: every entry is <= delta")]
    DegenerateInput,
    #[error("search invariant broken: {0}")]
    InvariantBroken(String),
    #[error("no panchromatic cell found; the coloring is not a Sperner coloring")]
    NoPanchromaticCell,
    #[error("solution carries no usable witnesses: {0}")]
    MissingWitnesses(String),
    #[error("too many subsets: n = {0} exceeds the supported guard")]
    TooManySubsets(usize),
    #[error("no reduction chain from {0} to {1}")]
    NoSuchReduction(String, String),
    #[error("instance not renderable: {0}")]
    NotRenderable(String),
    #[error("epsilon {0} outside the accepted range")]
    EpsilonRange(f64),
    #[error("invalid instance data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
