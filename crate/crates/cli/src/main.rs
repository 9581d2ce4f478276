use std::process::ExitCode;

use clap::Parser;
use dfds_cli::{dispatch, Cli};

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dfds: {e}");
            ExitCode::from(e.code())
        }
    }
}
