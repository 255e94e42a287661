use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Core(#[from] coldstandby::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} validation check(s) failed")]
    ChecksFailed { failed: usize },
}

impl CliError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        Self::Validation { field: field.to_owned(), message: message.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse(_) | Self::Validation { .. } | Self::ChecksFailed { .. } => 1,
            Self::Core(e) if e.is_numerical() => 2,
            Self::Core(_) => 1,
            Self::Io { .. } => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Parse(_) => "parse_error",
            Self::Validation { .. } => "validation_error",
            Self::Core(e) if e.is_numerical() => "numerical_error",
            Self::Core(_) => "validation_error",
            Self::Io { .. } => "io_error",
            Self::ChecksFailed { .. } => "checks_failed",
        }
    }

    /// Machine-readable record printed on failure.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            message: String,
            exit_code: u8,
            #[serde(skip_serializing_if = "Option::is_none")]
            field: Option<&'a str>,
        }
        let field = match self {
            Self::Validation { field, .. } => Some(field.as_str()),
            _ => None,
        };
        let record = Record { error: self.kind(), message: self.to_string(), exit_code: self.exit_code(), field };
        serde_json::to_string(&record).expect("error record serializes")
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
