use std::process::ExitCode;

use clap::Parser;
use faultflow::cli::{run, RunOptions};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let options = RunOptions::parse();
    match run(&options) {
        Ok(path) => {
            eprintln!("results written to {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
