use std::process::ExitCode;

use clap::Parser;
use treeseg_cli::Cli;

fn main() -> ExitCode {
    match treeseg_cli::run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
