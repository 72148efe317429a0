//! The `nsw` command line: solve, generate, check and benchmark.

pub mod bench;
pub mod check;
pub mod error;
pub mod gen;
pub mod solve;

use std::io::{IsTerminal, Write};
use std::path::Path;

use clap::{Parser, Subcommand};
use nsw_core::exact::DEFAULT_LIMIT;

use crate::bench::{BenchArgs, Format};
use crate::check::CheckArgs;
use crate::error::{exit, CliError, CliResult};
use crate::gen::GenArgs;
use crate::solve::SolveArgs;

/// Environment variable overriding the exhaustive-enumeration cap.
pub const LIMIT_ENV: &str = "NSW_ORACLE_LIMIT";

#[derive(Debug, Parser)]
#[command(name = "nsw", version, about = "Nash social welfare allocation of indivisible items")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm on an instance file and print a JSON report.
    Solve(SolveArgs),
    /// Generate an instance file.
    Gen(GenArgs),
    /// Audit an allocation against an instance.
    Check(CheckArgs),
    /// Run a benchmark suite against exhaustive optima.
    Bench(BenchArgs),
}

pub fn oracle_limit() -> CliResult<u128> {
    match std::env::var(LIMIT_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::invalid(format!("{LIMIT_ENV} must be a non-negative integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_LIMIT),
    }
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| CliError::io(&path.display().to_string(), e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                // A closed pipe (e.g. `| head`) is not an error worth reporting.
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("stdout", e)),
                _ => Ok(()),
            }
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let limit = oracle_limit()?;
    match cli.command {
        Command::Solve(args) => emit(&solve::cmd_solve(&args, limit)?, args.out.as_deref()),
        Command::Gen(args) => emit(&gen::cmd_gen(&args)?, args.out.as_deref()),
        Command::Check(args) => emit(&check::cmd_check(&args, limit)?, None),
        Command::Bench(args) => {
            bench::check_trials(args.suite, args.trials)?;
            let report = bench::run_bench(args.suite, args.trials, args.seed, limit)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            let text = match args.format {
                Format::Text => true,
                Format::Json => false,
                Format::Auto => args.out.is_none() && std::io::stdout().is_terminal(),
            };
            if let Some(path) = &args.out {
                emit(&json, Some(path))?;
            }
            if text {
                emit(bench::render_text(&report).trim_end(), None)?;
            } else if args.out.is_none() {
                emit(&json, None)?;
            }
            if report.all_satisfied {
                Ok(())
            } else {
                Err(CliError {
                    code: exit::BOUND_VIOLATED,
                    message: "a benchmark bound or gap expectation was violated".into(),
                })
            }
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::INVALID } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
