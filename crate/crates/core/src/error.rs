use thiserror::Error;

/// Errors produced by the modeling, planning and experiment layers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A caller-supplied argument violates an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vector or matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A raster source could not be parsed into a field.
    #[error("raster error: {0}")]
    Raster(String),

    /// A covariance matrix could not be factorized, even with jitter.
    #[error("factorization failed: {0}")]
    Factorization(String),

    /// A quantity left its admissible numerical range (negative variance,
    /// negative novelty beyond tolerance, non-positive precision diagonal).
    #[error("numerical breakdown: {0}")]
    Numerical(String),

    /// A configuration field failed validation; `path` names the field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CoreError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CoreError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
