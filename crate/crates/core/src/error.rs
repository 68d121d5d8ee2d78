use thiserror::Error;

/// Errors raised by configuration loading, validation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("joint state violates the constraint relation (deviation {deviation:e} rad)")]
    ConstraintViolation { deviation: f64 },

    #[error("improved Jacobian is singular (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input (parse and validation failures).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Invalid { .. } | Error::ConstraintViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
