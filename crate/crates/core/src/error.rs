use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("family failed validation: {0}")]
    Validation(String),

    #[error("invalid catalog parameters: {0}")]
    Catalog(String),

    #[error("state-space budget of {budget} exceeded")]
    BudgetExceeded { budget: usize },

    #[error("recursion does not contract: {0}")]
    NonContracting(String),

    #[error("table exhausted: radius {requested} requested at level {level}, enumerated to {available}")]
    TableExhausted { level: usize, requested: u32, available: u32 },

    #[error("undetermined: {0}")]
    Undetermined(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI and the C interface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Json(_) | Error::Parse(_) => 2,
            Error::BudgetExceeded { .. } => 3,
            _ => 1,
        }
    }
}
