use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resolution guard failed at order {order}: high-frequency ratio {ratio:.3e}")]
    Resolution { order: usize, ratio: f64 },
    #[error("boundary mass {ratio:.3e} exceeds tolerance in {context}")]
    BoundaryMass { context: String, ratio: f64 },
    #[error("exact arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
