//! `swapsim` command-line front end.

mod args;
mod classical;
mod error;
mod io;
mod report;
mod simulate;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, ClassicalCommand, Command};
use error::{CliError, CliResult};

/// Sizes the global rayon pool. Output never depends on the thread count.
pub(crate) fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate::simulate(a),
        Command::Analyze(a) => simulate::analyze(a),
        Command::Report(a) => report::report(a),
        Command::Classical(ClassicalCommand::Generate(a)) => classical::generate(a),
        Command::Classical(ClassicalCommand::Discard(a)) => classical::discard(a),
        Command::Classical(ClassicalCommand::BlindCheck(a)) => classical::blind_check(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swapsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
