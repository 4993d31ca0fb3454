use std::process::ExitCode;

use clap::Parser;

mod bench;
mod config;
mod run;

use config::{Cli, Command};

/// Solver did not converge; output files are still written.
const EXIT_SOLVER_FAILURE: u8 = 2;
/// Invalid configuration or I/O error.
const EXIT_CONFIG_ERROR: u8 = 1;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => run::run_solve(args),
        Command::Study(args) => run::run_study(args),
        Command::MalmBench(args) => bench::run_malm_bench(args).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_SOLVER_FAILURE),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG_ERROR)
        }
    }
}
