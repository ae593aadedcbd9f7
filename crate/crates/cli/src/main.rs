mod args;
mod commands;
mod error;
mod output;
mod range;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GapSweep(a) => commands::gap_sweep(a),
        Command::Compare(a) => commands::compare(a),
        Command::Multiscale(a) => commands::multiscale(a),
        Command::Exclusion(a) => commands::exclusion(a),
        Command::ZeroRange(a) => commands::zero_range(a),
        Command::ReturnProb(a) => commands::return_prob(a),
        Command::VerifyAll(a) => commands::verify_all(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
