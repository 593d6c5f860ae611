use std::process::ExitCode;

use clap::Parser;
use fmrnn::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: failed checks: {}", outcome.failures.join(", "));
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
