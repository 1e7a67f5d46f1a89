use std::process::ExitCode;

use clap::Parser;
use xlris_bench::cli::{execute, Cli};

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xlris: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
