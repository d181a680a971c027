//! The `crossloss` command line.
//!
//! Every subcommand resolves its configuration from an optional TOML file
//! overlaid with flags, writes machine-readable results to files (each with
//! a `<file>.meta.json` sidecar naming the config hash and seed) and returns
//! a short human summary.
//!
//! Influence scores are the derivative of the test loss with respect to the
//! weight of a training sample: positive means upweighting the sample raises
//! the test loss (amplifying), negative means it lowers it (mitigating).

pub mod args;
pub mod commands;
pub mod config;
pub mod files;

use anyhow::Result;
use clap::Parser;

pub use args::{Cli, Command};

/// Runs a parsed command line and returns the summary for standard output.
pub fn run(cli: Cli) -> Result<String> {
    let file = config::load_file(cli.config.as_deref())?;
    commands::dispatch(&cli.command, &file, cli.seed)
}

/// Parses `argv` (including the program name) and runs it.
pub fn run_from<I, S>(argv: I) -> Result<String>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run(Cli::try_parse_from(argv)?)
}
