use std::fs;
use std::process::ExitCode;

use clap::Parser;
use esdual::cli::{run, Cli, EXIT_PARSE};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli.command) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let text = report.render();
    match cli.command.output() {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_PARSE);
            }
        }
        None => print!("{text}"),
    }
    if report.exit_code != 0 {
        eprintln!("error: verification failed (exit {})", report.exit_code);
    }
    ExitCode::from(report.exit_code)
}
