use thiserror::Error;

pub type ServiceResult<T> = Result<T, ServiceError>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] satf_core::Error),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("event log line {line}: {message}")]
    EventLog { line: usize, message: String },
    #[error("no completed trials")]
    NoCompletedTrials,
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}
