use std::process::ExitCode;

use clap::Parser;
use tailcop_cli::{run_with_threads, Cli};

fn main() -> ExitCode {
    let outcome = Cli::parse()
        .into_invocation()
        .and_then(|inv| run_with_threads(&inv.config, inv.threads));
    match outcome {
        Ok(outcome) => {
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            for file in &outcome.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
