use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no support gap: m2 * m_-2 = {product} >= 1")]
    NoGap { product: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of an iterative numerical method.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::InternalConsistency(_) | Error::Linalg(_)
        )
    }

    /// True for rejected inputs and configs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Domain(_)
                | Error::Pole(_)
                | Error::Config { .. }
                | Error::Json(_)
                | Error::NoGap { .. }
        )
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
