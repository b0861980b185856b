//! CLI-side errors: every failure carries the pipeline stage it happened in
//! and whether it was the user's fault (usage) or the pipeline's (runtime).
//! `main` turns the kind into the process exit code: usage 2, runtime 1.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments, unreadable input, invalid config: exit code 2.
    Usage,
    /// The pipeline itself failed (data, numerics, output I/O): exit code 1.
    Runtime,
}

#[derive(Debug, thiserror::Error)]
#[error("ERROR {stage}: {message}")]
pub struct CliError {
    pub stage: String,
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(stage: &str, message: impl fmt::Display) -> Self {
        CliError {
            stage: stage.to_string(),
            kind: ErrorKind::Usage,
            message: message.to_string(),
        }
    }

    pub fn runtime(stage: &str, message: impl fmt::Display) -> Self {
        CliError {
            stage: stage.to_string(),
            kind: ErrorKind::Runtime,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => 2,
            ErrorKind::Runtime => 1,
        }
    }
}

/// Tag a library error with the stage it surfaced in. Library errors during
/// computation are runtime failures; precondition problems should be caught
/// up front by the config layer and reported as usage errors instead.
pub fn at_stage(stage: &'static str) -> impl Fn(sharpefolio_core::Error) -> CliError {
    move |err| CliError::runtime(stage, err)
}

pub type Result<T> = std::result::Result<T, CliError>;
