use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("singular conjugating matrix")]
    SingularMatrix,

    #[error("point is not in the open set M: {0}")]
    NotInM(String),

    #[error("eigenvalue gap {gap:e} below tolerance {tol:e}")]
    DegenerateGap { gap: f64, tol: f64 },

    #[error("not a section point: {0}")]
    NotSection(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("rank-1 condition fails (sigma2/sigma1 = {ratio:e})")]
    RankOneFailure { ratio: f64 },

    #[error("complex or coincident roots: {0}")]
    ComplexRoots(String),

    #[error("ill-conditioned Vandermonde system (condition {0:e})")]
    IllConditioned(f64),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("bracket is singular here (|Delta| = {0:e})")]
    SingularBracket(f64),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("rejection sampling exhausted after {0} draws")]
    SamplingExhausted(usize),

    #[error("invalid word `{0}`: letters must be A or B")]
    InvalidWord(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
