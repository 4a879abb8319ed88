mod args;
mod cmd;
mod config;
mod exit;
mod input;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use clap::error::ErrorKind;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    let outcome = match cli.command {
        Command::Separate(a) => cmd::separate::run(a),
        Command::Synth(a) => cmd::synth::run(a),
        Command::Features(a) => cmd::features::run(a),
        Command::Evaluate(a) => cmd::evaluate::run(a),
        Command::Sweep(a) => cmd::sweep::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
