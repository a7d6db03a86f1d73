use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = sbm_cli::Args::parse();
    match sbm_cli::execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.structured());
            ExitCode::FAILURE
        }
    }
}
