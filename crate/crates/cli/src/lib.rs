//! Library backing the `fsnav` harness CLI and the standalone `retriever`
//! tool: experiment configs, subcommand implementations, and the shared
//! retrieval entry point.

pub mod commands;
pub mod config;
pub mod retrieve;

/// Process exit codes shared by every subcommand.
pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Error marker for misconfiguration; the binaries map it to exit code 3.
#[derive(Debug)]
pub struct ConfigFailure(pub String);

impl std::fmt::Display for ConfigFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigFailure {}

/// Build a config-failure error (exit code 3 at the top level).
pub fn config_failure(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigFailure(msg.into()))
}

/// Exit code for a finished command result: config failures are 3,
/// anything else is a runtime failure (1).
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigFailure>().is_some() {
        EXIT_CONFIG
    } else {
        EXIT_PARTIAL
    }
}
