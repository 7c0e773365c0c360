mod args;
mod commands;
mod input;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Exit codes: 0 success, 1 usage or input error, 2 geometric failure.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_GEOMETRIC: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let code = match &cli.command {
        Command::Invariants(a) => commands::invariants(a),
        Command::Verify(a) => commands::verify(a),
        Command::Sample(a) => commands::sample(a),
        Command::Flow(a) => commands::flow(a),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("eqa: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
