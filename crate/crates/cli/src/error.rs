use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ouexec_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Machine-readable failure written to `error.json` and stderr.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub exit_code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    /// 1 bad input or i/o, 2 regime error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_regime() => 2,
            CliError::Core(ouexec_core::Error::InvalidParameter(_)) => 1,
            CliError::Core(_) => 3,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "regime",
            3 => "numerical",
            _ => match self {
                CliError::Io(_) => "io",
                _ => "input",
            },
        }
    }

    pub fn failure(&self) -> Failure {
        Failure { exit_code: self.exit_code(), kind: self.kind(), message: self.to_string() }
    }
}
