use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown zone id {0}")]
    InvalidZone(u32),
    #[error("object at ({x}, {y}) is outside the board")]
    OutOfBounds { x: i32, y: i32 },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("trial is not finished")]
    NotFinished,
    #[error("no completed steps yet")]
    NotAvailable,
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate benchmark: {0} standard deviation is not positive")]
    DegenerateBenchmark(&'static str),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("trial {0} is not completed")]
    IncompleteTrial(u32),
    #[error("invalid board geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
}
