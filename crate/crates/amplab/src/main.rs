use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = amplab::cli::Cli::parse();
    match amplab::cli::run(cli, &mut std::io::stdout().lock()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
