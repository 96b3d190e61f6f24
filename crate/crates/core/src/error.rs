use thiserror::Error;

/// Errors raised anywhere in the model, simulation and inference stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("fit did not converge: {message} (best log-likelihood {log_likelihood})")]
    Fit {
        message: String,
        best: Vec<f64>,
        log_likelihood: f64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("margin mismatch: expected {expected}, found {found}")]
    Margin { expected: String, found: String },

    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    #[error("prior error: {0}")]
    Prior(String),

    #[error("feature error: {0}")]
    Feature(String),

    #[error("model error: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Fit { .. } | Error::Simulation(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
