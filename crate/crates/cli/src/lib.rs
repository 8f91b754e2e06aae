//! Experiment configs and the subcommands of the `skorokhod` binary.

pub mod commands;
pub mod config;
pub mod fixture;

pub use commands::{run, Command, Outcome, Overrides, Status};
pub use config::{ExperimentConfig, Format};
