//! Configuration, dispatch and artifact writing for the `gdms` command.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Outcome, RunError, RunOptions, Verb};
pub use config::{ConfigError, RunConfig};
