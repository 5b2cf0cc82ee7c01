use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("oracle capacity exceeded: n = {n} is over the cap {cap}")]
    OracleCap { n: usize, cap: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
