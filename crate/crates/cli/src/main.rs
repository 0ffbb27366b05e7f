use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = earsim::cli::Cli::parse();
    match earsim::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(earsim::exit_code(&e))
        }
    }
}
