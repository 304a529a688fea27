use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use tcbench_cli::cli::Cli;
use tcbench_cli::commands::{exit_code, run, Globals, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        if let Some(n) = cli.jobs {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("setting up worker threads")?;
        }
        run(&cli.command, Globals { format: cli.format, strict: cli.strict })
    })();
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Degenerate) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
