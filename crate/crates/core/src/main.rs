use std::process::ExitCode;

use clap::Parser;
use sarcasm_core::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(outcome) => {
            for line in &outcome.messages {
                println!("{line}");
            }
            if outcome.complete {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: some items failed; rerun to resume from the cache");
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
