use crate::keyring::PlainIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("secret payload is empty")]
    EmptySecret,

    #[error("secret payload must carry at least {min} bits, got {got}")]
    SecretTooShort { min: usize, got: usize },

    #[error("index {0} is already registered")]
    DuplicateIndex(PlainIndex),

    #[error("index {0} is not registered")]
    NotFound(PlainIndex),

    #[error("layout overflow: {0}")]
    LayoutOverflow(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("temporal synchronization failed: best template agreement {best:.3}")]
    SyncFailed { best: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("registry record is malformed at line {line}: {reason}")]
    RegistryCorrupt { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
