//! Command-line companion to `sharpefolio-core`: file formats, config
//! plumbing, synthetic data, charts, and the subcommand implementations.
//! The binary in `main.rs` only parses arguments and dispatches here.

pub mod chart;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod synth;

pub use error::{CliError, ErrorKind};
