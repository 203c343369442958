use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigensolver did not converge for eigenvalue {0}")]
    NoConvergence(usize),

    #[error("k = {k} must be smaller than the number of points ({n_points})")]
    KTooLarge { k: usize, n_points: usize },

    #[error("requested {count} directions but latent dimension is {latent_dim}")]
    CountTooLarge { count: usize, latent_dim: usize },

    #[error("direction index {index} out of range for {count} directions")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("direction set was computed with {found}, plan requires {expected}")]
    MethodMismatch { expected: String, found: String },

    #[error("classifier oracle failed: {0}")]
    OracleFailure(String),

    #[error("infeasible dataset spec: {0}")]
    InfeasibleSpec(String),

    #[error("bad magic: not an LDM1 matrix file and not parseable as CSV ({0})")]
    BadMagic(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("content hash mismatch for {path}: manifest says {expected}, file hashes to {found}")]
    HashMismatch {
        path: String,
        expected: String,
        found: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical routines themselves, as opposed to
    /// bad inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::NoConvergence(_)
        )
    }
}
