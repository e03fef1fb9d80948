//! Pipeline driver for the `h2s` command: ingestion, configuration, stage
//! artifacts and the end-to-end run.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;

pub use config::{DataSource, EmbedConfig, InferenceConfig, RunConfig};
pub use error::{CliError, CliResult};
pub use ingest::{ingest, FileSource, Format, Input};
pub use pipeline::{run_pipeline, RunOutcome};
