use std::process::ExitCode;

use clap::Parser;
use cvtomo::cli::{self, Cli};

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let args = Cli::parse();
    match cli::run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
