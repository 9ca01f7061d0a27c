//! Command-line front end: configuration, dispatch and report files.
//!
//! Every command produces a JSON report and a CSV table holding the same
//! numbers. Both are byte-identical for identical configurations, whatever
//! the worker count.

mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::run;
pub use config::{Cli, Command, RunConfig};
pub use error::{CliError, EXIT_ASSERTION, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};
pub use report::{Assertion, Cell, ReportBundle, Table, SCHEMA_VERSION};

/// Environment variable overriding the number of worker threads.
pub const WORKERS_ENV: &str = "FOUBERRY_WORKERS";

/// Reads the worker override, if any.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{WORKERS_ENV} = {s:?} violates: integer >= 1"))),
        },
        Err(_) => Ok(None),
    }
}
