use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid polar code parameters: {0}")]
    InvalidCode(String),
    #[error("infeasible pattern matrix: {0}")]
    InfeasiblePatterns(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no trials requested")]
    NoTrials,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
