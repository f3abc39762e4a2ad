//! `hwroute` command-line driver.
//!
//! Every command resolves the scenario (file plus flag overrides), writes a
//! `manifest.json` next to its outputs and can be replayed with
//! `hwroute rerun --manifest <file>`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error,
//! 4 `--assert` check failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod manifest;
mod report;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// Outcome of a failed command, mapped onto the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
    Assert(Vec<String>),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Assert(_) => 4,
        }
    }
}

impl From<hwroute::Error> for Failure {
    fn from(e: hwroute::Error) -> Self {
        use hwroute::Error;
        match e {
            Error::Config(_) | Error::Parse { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::Assert(checks) => {
                    for c in checks {
                        eprintln!("assert failed: {c}");
                    }
                }
            }
            ExitCode::from(f.code())
        }
    }
}
