//! Command-line front end for the `pasdfs` library: alpha sweeps of the
//! nonclassicality witnesses, single-state listings, phase and Q-function
//! grids, and an oracle self-check.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 self-check
//! mismatch.

pub mod args;
mod commands;
pub mod output;

use std::ffi::OsString;

use args::{Command, ParseFailure};
use clap::error::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<pasdfs::Error> for CliError {
    fn from(e: pasdfs::Error) -> Self {
        match e {
            pasdfs::Error::Capacity { .. } | pasdfs::Error::Parameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Rendered output plus the exit status it should produce.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
    /// Printed to standard error after the output is written.
    pub note: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self {
            text,
            code: 0,
            note: None,
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let cli = match args::parse(argv) {
        Ok(cli) => cli,
        Err(ParseFailure::Clap(e)) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
        Err(ParseFailure::Config(e)) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let (result, out) = match &cli.command {
        Command::Sweep(a) => (commands::sweep(a), a.common.out.clone()),
        Command::State(a) => (commands::state(a), a.common.out.clone()),
        Command::Phase(a) => (commands::phase(a), a.common.out.clone()),
        Command::Qfunc(a) => (commands::qfunc(a), a.common.out.clone()),
        Command::Selfcheck(a) => (commands::selfcheck(a), a.common.out.clone()),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = output::write(out.as_deref(), &outcome.text) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    if let Some(note) = &outcome.note {
        eprintln!("{}: {note}", if outcome.code == 0 { "warning" } else { "error" });
    }
    outcome.code
}
