use std::path::PathBuf;

use pedf_core::evaluation::BenchError;
use pedf_core::event_log::LogError;
use pedf_core::network::NetworkError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Data { context: String, source: LogError },
    #[error(transparent)]
    Model(#[from] NetworkError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

impl CliError {
    /// Stable, machine-readable error class printed as `error[<category>]`.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Data { .. } => "data",
            CliError::Model(NetworkError::UnknownEvent(_)) => "unknown-event",
            CliError::Model(NetworkError::VersionMismatch { .. } | NetworkError::CorruptModel(_)) => "model-file",
            CliError::Model(_) => "model",
            CliError::Bench(BenchError::Invalid(_)) => "config",
            CliError::Bench(BenchError::Log(_)) => "data",
            CliError::Bench(_) => "bench",
        }
    }

    /// `error[category]: message`, newlines folded so the report stays one line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[{}]: {msg}", self.category())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn data(context: impl Into<String>, source: LogError) -> Self {
        CliError::Data { context: context.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
