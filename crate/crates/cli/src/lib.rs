//! Command-line orchestration of propagation, verification, bound and
//! rate experiments. The `ssfm` binary is a thin wrapper over [`commands`].

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_bound, cmd_mi, cmd_propagate, cmd_sweep, cmd_verify};
pub use config::ExperimentConfig;
pub use error::CliError;
