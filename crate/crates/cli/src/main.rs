//! `smectic`: jump costs, transition profiles, cell minimization, ε-sweeps and
//! the property battery from the command line.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 numerical failure, 4 failed
//! acceptance (`--strict`, or any failing check).

mod commands;
mod config;
mod output;
mod plots;

use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use smectic_core::Error as CoreError;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const THREADS_VAR: &str = "SMECTIC_THREADS";

/// Bad input from the user: maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "smectic", version, about = "Smectic energy toolkit: defect costs, BPS profiles, cell minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cost per unit length of a straight defect between two layer slopes.
    Jumpcost(commands::JumpcostArgs),
    /// Transition profile and the 1D cell energy for one or more ε.
    Profile(commands::ProfileArgs),
    /// Minimize the discrete energy on the unit cell.
    Minimize(commands::MinimizeArgs),
    /// Diagnostics of the transition-layer ansatz along a sequence of ε.
    Sweep(commands::SweepArgs),
    /// Run the property battery.
    Check(commands::CheckArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<CoreError>() {
        Some(
            CoreError::InvalidGrid(_)
            | CoreError::GridTooCoarse { .. }
            | CoreError::NonPositiveEpsilon(_)
            | CoreError::DegenerateJump(_)
            | CoreError::InadmissibleSegment { .. }
            | CoreError::FrameMismatch
            | CoreError::NonPositivePhi { .. }
            | CoreError::QuadratureTooCoarse { .. }
            | CoreError::InvalidArgument(_)
            | CoreError::Parse(_),
        ) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("{THREADS_VAR} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run() -> Result<u8> {
    configure_threads()?;
    let argv = config::merge(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Ok(match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            });
        }
    };
    match &cli.command {
        Command::Jumpcost(a) => commands::jumpcost(a),
        Command::Profile(a) => commands::profile(a),
        Command::Minimize(a) => commands::minimize(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Check(a) => commands::check(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
