use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("matrix is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is rank deficient: column {column} is linearly dependent on earlier columns")]
    RankDeficient { column: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sphere precoding failed for user {user}: solver returned {status}")]
    Solver { user: usize, status: String },

    #[error("experiment {experiment}: {source}")]
    Experiment {
        experiment: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("covariance cache: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
