//! `fi-traffic`: simulation runs, exact tabulation, preimage counts and the
//! verification suite.

mod commands;
mod config;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Output};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "fi-traffic",
    version,
    about = "Fukui-Ishibashi traffic automaton and its exact theory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run seeded replicas and emit the per-step flow as CSV
    Simulate(RunConfig),
    /// Tabulate the exact block probability and flow as CSV
    Exact(RunConfig),
    /// Count m-admissible preimages, optionally against brute force, as JSON
    Preimages(RunConfig),
    /// Run the cross-check suite; exits non-zero on any failure
    Verify(RunConfig),
}

type Run = fn(&RunConfig) -> Result<Output, Failure>;

fn execute(command: &Command) -> Result<(Output, Option<PathBuf>), Failure> {
    let (flags, run): (&RunConfig, Run) = match command {
        Command::Simulate(c) => (c, commands::simulate),
        Command::Exact(c) => (c, commands::exact),
        Command::Preimages(c) => (c, commands::preimages),
        Command::Verify(c) => (c, commands::verify),
    };
    let cfg = RunConfig::resolve(flags).map_err(Failure)?;
    Ok((run(&cfg)?, cfg.out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (output, path) = match execute(&cli.command) {
        Ok(done) => done,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let written = match &path {
        Some(path) => fs::write(path, &output.bytes),
        None => io::stdout().lock().write_all(&output.bytes),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    match output.failed {
        Some(msg) => {
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
        None => ExitCode::SUCCESS,
    }
}
