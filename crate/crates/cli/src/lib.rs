//! Command-line front end: argument definitions, state files, and one module
//! per subcommand. [`run`] maps every failure to a [`CliError`] whose exit
//! code the binary returns.

pub mod args;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod format;
pub mod state_file;

pub use args::Cli;
pub use error::{CliError, CliResult};

use args::Command;
use commands::Output;

pub fn run(cli: &Cli) -> CliResult<()> {
    let out = Output { json: cli.json, path: cli.out.as_deref() };
    match &cli.command {
        Command::Monotone(a) => commands::monotone::run(a, &out),
        Command::Distill(a) => commands::distill::run(a, &out),
        Command::SampleHaar(a) => commands::sample_haar::run(a, cli.seed, &out),
        Command::RateScan(a) => commands::rate_scan::run(a, &out),
        Command::Selftest(a) => commands::selftest::run(a, cli.seed, &out),
    }
}
