use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |A - A^†| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max |U^†U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("group closure exceeded {max_size} elements")]
    GroupTooLarge { max_size: usize },

    #[error("state vector has zero norm")]
    ZeroVector,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid simulation model: {0}")]
    InvalidModel(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("fiducial does not generate a SIC (max overlap deviation {deviation:.3e})")]
    NotSic { deviation: f64 },

    #[error("operator is not rank one: {0}")]
    NotRankOne(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("no violation witness: {0}")]
    NoWitness(String),

    #[error("malformed conic problem: {0}")]
    Problem(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
