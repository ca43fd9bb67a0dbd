use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation failed at {path}: {msg}")]
    Validation { path: String, msg: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("incomplete history: length {len}, horizon {horizon}")]
    IncompleteHistory { len: usize, horizon: usize },
    #[error("node budget exceeded: {required} nodes required, budget {budget}")]
    Budget { required: f64, budget: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("missing parameter: {0}")]
    MissingParam(&'static str),
    #[error("validity condition violated: {0}")]
    Validity(String),
    #[error("unknown name: {0}")]
    Unknown(String),
    #[error("missing history in strategy table: {0:?}")]
    MissingHistory(Vec<(usize, usize)>),
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Validation { path: path.into(), msg: msg.into() }
}
