use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

/// A validation problem located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub pointer: String,
    pub message: String,
}

impl Issue {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at `{pointer}`: {message}")]
    Parse { pointer: String, message: String },
    #[error("invalid configuration ({} issue(s))", .0.len())]
    Validation(Vec<Issue>),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] gskor_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse-error",
            CliError::Validation(_) => "validation-error",
            CliError::Input(_) => "input-error",
            CliError::Core(e) => e.kind(),
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
        }
    }

    /// The machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({"error": self.kind(), "message": self.to_string()});
        match self {
            CliError::Parse { pointer, .. } => v["pointer"] = json!(pointer),
            CliError::Validation(issues) => v["issues"] = json!(issues),
            _ => {}
        }
        v
    }
}
