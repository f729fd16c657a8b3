use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
