//! Command-line surface of imflow: CSV ingestion, JSON configuration,
//! JSON reports and CSV diagram export.
//!
//! Exit codes: 0 when the analysis completed (failed constraint checks
//! included), 2 for input errors, 3 for unachievable requests, 4 for an
//! internal invariant breach.

pub mod args;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;

use std::io::Write;

pub use args::{Cli, Command};
pub use error::{CliError, Result};
pub use report::Output;

/// Shipped JSON schemas, by file name.
pub mod schemas {
    pub const REPORT: &str = include_str!("../schemas/report.schema.json");
    pub const SIMULATE_CONFIG: &str = include_str!("../schemas/simulate-config.schema.json");
    pub const CANDIDATES_CONFIG: &str = include_str!("../schemas/candidates-config.schema.json");
}

pub fn execute(command: &Command) -> Result<Output> {
    match command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::TrainChain(a) => commands::train_chain(a),
        Command::ObjectiveSweep(a) => commands::objective_sweep(a),
        Command::GradCheck(a) => commands::grad_check_cmd(a),
    }
}

fn output_args(command: &Command) -> &args::OutputArgs {
    match command {
        Command::Analyze(a) => &a.output,
        Command::Simulate(a) => &a.output,
        Command::TrainChain(a) => &a.output,
        Command::ObjectiveSweep(a) => &a.output,
        Command::GradCheck(a) => &a.output,
    }
}

/// Runs a parsed command, writes its outputs and returns the exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let output = execute(&cli.command)?;
    report::emit(&output, output_args(&cli.command), stdout)?;
    Ok(output.exit_code)
}
