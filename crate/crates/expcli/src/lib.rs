//! Experiment drivers: each subcommand turns a validated [`config::Settings`]
//! into CSV tables, JSON reports and a manifest.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::time::Instant;

pub use config::{ExperimentTag, Overrides, RunConfig, Settings};
pub use error::{CliError, CliResult};
pub use output::{Manifest, Outcome, Table};

/// Runs the configured experiment and writes its outputs.
pub fn execute(settings: &Settings) -> CliResult<Manifest> {
    let start = Instant::now();
    let outcome = experiments::run(settings)?;
    output::write_outcome(settings, &outcome, start.elapsed().as_secs_f64())
}
