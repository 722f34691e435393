use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("backend `{name}` failed: {message}")]
    Backend { name: String, message: String },

    #[error("loss became non-finite at epoch {epoch}, batch {batch} (loss = {loss})")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },

    #[error("image decode failed: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn backend(name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Backend {
            name: name.into(),
            message: message.into(),
        }
    }
}
