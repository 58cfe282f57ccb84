use std::process::ExitCode;

use clap::Parser;
use smoothcert_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("smoothcert: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
