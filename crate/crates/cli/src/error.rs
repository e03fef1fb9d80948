use std::path::PathBuf;

use thiserror::Error;

/// Failure of a CLI command, tagged with the stage it came from.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("{path} not found; run `h2s {stage}` first")]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: h2s_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed artifact: {source}")]
    Artifact {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn stage(stage: &'static str) -> impl FnOnce(h2s_core::Error) -> CliError {
        move |source| CliError::Stage { stage, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Process exit code: 2 for invalid input or configuration, 3 for
    /// numerical non-convergence, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        use h2s_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Input { .. } | CliError::MissingArtifact { .. } | CliError::Artifact { .. } => 2,
            CliError::Stage { source, .. } => match source {
                E::MebNotConverged { .. } | E::LowAcceptance { .. } => 3,
                _ => 2,
            },
            CliError::Io { .. } => 1,
        }
    }
}
