use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] weakcvx::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 1 for bad input, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. } | HarnessError::Validation { .. } => 1,
            HarnessError::Core(weakcvx::Error::InvalidParameter { .. } | weakcvx::Error::Parse { .. }) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
