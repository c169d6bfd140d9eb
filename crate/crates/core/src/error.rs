use thiserror::Error;

/// Errors produced by the incremental auto-encoder pipeline.
#[derive(Error, Debug)]
pub enum InaeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("training diverged at epoch {epoch} with learning rate {learning_rate}")]
    Divergence { epoch: usize, learning_rate: f64 },

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl InaeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        InaeError::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        InaeError::ShapeMismatch(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, InaeError>;
