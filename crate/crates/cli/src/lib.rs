//! Experiment driver for Gaussian-mixture credit scoring: configuration,
//! the shared data pipeline and one function per subcommand.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod reference;

pub use crate::config::{DatasetName, Overrides, PipelineConfig};
pub use crate::error::{CliError, CliResult};
