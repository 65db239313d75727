//! `scour`: fit power-law scour equations, run the exclusion matrix, and
//! compare against published formulas.

mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn workers(command: &Command) -> Option<usize> {
    match command {
        Command::Fit(a) => a.common.workers,
        Command::Sensitivity(a) => a.common.workers,
        Command::Baselines(a) => a.common.workers,
        Command::Predict(_) | Command::Split(_) => None,
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Sensitivity(a) => commands::sensitivity(a),
        Command::Baselines(a) => commands::baselines(a),
        Command::Predict(a) => commands::predict(a),
        Command::Split(a) => commands::split(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match workers(&cli.command) {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} workers: {e}"))),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
