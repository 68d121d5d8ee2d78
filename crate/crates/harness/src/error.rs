use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] cablearm::Error),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("malformed report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn input(message: impl Into<String>) -> Self {
        HarnessError::Input(message.into())
    }

    pub(crate) fn report(message: impl Into<String>) -> Self {
        HarnessError::Report(message.into())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
