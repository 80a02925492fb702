//! Batch front-end for `covci`: CSV ingestion, whitening, the analysis
//! subcommands and their report files.

pub mod config;
pub mod error;
pub mod ingest;
pub mod plot;
pub mod report;
pub mod run;
pub mod simulate;

pub use config::{Cli, Command, RunConfig};
pub use error::{exit, CliError, CliResult};
pub use ingest::{ingest_csv, ingest_reader};

/// The JSON schema every emitted JSON file validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

/// Runs a parsed command line and returns the exit code.
pub fn execute(cli: &Cli) -> CliResult<i32> {
    let cfg = RunConfig::resolve(&cli.common)?;
    match cli.command {
        Command::Simulate { replicate } => simulate::simulate(&cfg, replicate),
        Command::Calibrate {
            replicates,
            theta_per_replicate,
        } => simulate::calibrate(&cfg, replicates, theta_per_replicate),
        ref command => {
            let stage = run::Stage::of(command).expect("analysis command");
            run::analyze(&cfg, stage, command.name())
        }
    }
}
