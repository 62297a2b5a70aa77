use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ppmlrank::cli::Cli::parse();
    match ppmlrank::cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
