use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate vector: {0}")]
    DegenerateVector(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("rank-deficient normal equations; use a ridge term > 0")]
    RankDeficient,

    #[error("invalid noise/combine/kernel pairing: {0}")]
    InvalidPairing(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no closed form for instance: {0}")]
    NoClosedForm(String),

    #[error("optimization diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },

    #[error("coordinate {0} of x0 is zero; multiplicative reparameterization is degenerate")]
    DegenerateCoordinate(usize),

    #[error("unknown method: {0}")]
    UnknownMethod(String),

    #[error("model family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("malformed csv at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },

    #[error("imputation precondition violated: {0}")]
    Imputation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
