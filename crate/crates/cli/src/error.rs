use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Bad input file contents; `line` is 1-based and counts the header.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Model(#[from] treesurv_core::Error),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<u64>,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io { .. } => "io",
            Self::Parse { .. } => "parse",
            Self::Model(_) => "model",
            Self::Format { .. } => "format",
            Self::Usage(_) => "usage",
        }
    }

    /// One JSON object on one line, for stderr.
    pub fn to_line(&self) -> String {
        let line = match self {
            Self::Parse { line, .. } => Some(*line),
            _ => None,
        };
        serde_json::to_string(&ErrorLine {
            error: self.kind(),
            message: self.to_string(),
            line,
        })
        .expect("error line serializes")
    }
}
