use std::path::{Path, PathBuf};

/// Failure of a CLI stage. Domain problems exit with 1, environment
/// problems (I/O, missing artifacts) with 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] voxboost_core::Error),
    #[error("invalid config:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("{}: {msg}", .path.display())]
    Format { path: PathBuf, msg: String },
    #[error("missing upstream artifact {} (run `voxboost {stage}` first)", .path.display())]
    Missing { path: PathBuf, stage: &'static str },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) | CliError::Config(_) | CliError::Format { .. } => 1,
            CliError::Missing { .. } | CliError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, msg: impl Into<String>) -> Self {
        CliError::Format { path: path.to_path_buf(), msg: msg.into() }
    }

    pub(crate) fn from_csv(path: &Path, e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => CliError::io(path, source),
            other => CliError::format(path, format!("{other:?}")),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
