use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, AppError>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] hubreg_core::Error),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn from_csv(path: impl Into<PathBuf>, err: csv::Error) -> Self {
        let path = path.into();
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(source) => AppError::Io { path, source },
                other => AppError::format(path, format!("{other:?}")),
            }
        } else {
            AppError::format(path, err.to_string())
        }
    }

    /// 2 for user or configuration errors, 3 for I/O failures, 4 for broken internal invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(hubreg_core::Error::Decomposition(_)) => 4,
            AppError::Core(_) | AppError::Config(_) | AppError::Format { .. } => 2,
            AppError::Io { .. } => 3,
            AppError::Internal(_) => 4,
        }
    }
}
