use std::process::ExitCode;

use bbsi_cli::{execute, Cli, CliError};
use clap::Parser;

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bbsi: {e}");
            match e {
                CliError::ValidationFailed { .. } => ExitCode::from(3),
                CliError::Usage(_) | CliError::OracleTooLarge { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
