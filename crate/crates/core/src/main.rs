use std::process::ExitCode;

use clap::Parser;
use fdclutter::cli::{run, Cli, ExperimentSpec};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&ExperimentSpec::from(&cli)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
