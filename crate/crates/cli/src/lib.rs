//! The `stse` command line. [`run`] executes a parsed command against
//! arbitrary output streams so tests can drive it in-process.

pub mod args;
mod commands;
mod files;

use std::io::Write;

pub use args::{Cli, Command};
pub use commands::{run_sweep, SweepOutcome};

pub const EXIT_SKILLFUL: i32 = 0;
pub const EXIT_LONGER: i32 = 10;
pub const EXIT_BAD: i32 = 20;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_INPUT, error: error.into() }
    }

    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_USAGE, error: error.into() }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_RUNTIME, error: error.into() }
    }
}

/// Runs one command. The report goes to `out`, diagnostics to `err`; the
/// return value is the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Evaluate(a) => commands::evaluate(&a, out, err),
        Command::Backtest(a) => commands::backtest(&a, out, err),
        Command::Sweep(a) => commands::sweep(&a, out, err),
        Command::Mintrack(a) => commands::mintrack(&a, out),
        Command::Minbtl(a) => commands::minbtl(&a, out),
        Command::Report(a) => commands::report(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    }
}
