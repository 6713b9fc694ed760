use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid spin value {value} at site {site}; spins must be +1 or -1")]
    InvalidSpin { site: usize, value: i8 },

    #[error("coupling matrix is not symmetric at ({i}, {j}): {forward} vs {backward}")]
    Asymmetric {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },

    #[error("negative coupling J[{i}][{j}] = {value}; only ferromagnetic systems are supported")]
    NegativeCoupling { i: usize, j: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("site index {index} out of range for a system of {n} spins")]
    SiteOutOfRange { index: usize, n: usize },

    #[error("system has {n} spins, above the enumeration cap of {cap}; use the Glauber sampler instead")]
    TooLarge { n: usize, cap: usize },

    /// A precondition on the numerical inputs does not hold.
    #[error("{0}")]
    Domain(String),

    #[error("invalid system document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
