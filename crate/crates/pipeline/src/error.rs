use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] exceedmix::Error),

    #[error("fetch failed for station {station}: {message}")]
    Fetch { station: String, message: String },

    #[error("preprocessing failed for station {station}: {message}")]
    Station { station: String, message: String },

    #[error("preprocessing error: {0}")]
    Preprocess(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// Process exit code: 1 usage, 3 numerical failure, 2 anything else
    /// (bad or missing data, I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
