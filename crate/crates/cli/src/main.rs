//! `hb`: simulate cyclic evolutions, report geometric-phase time bounds and
//! run verification suites.
//!
//! Exit codes: 0 success, 1 failed verification, 2 configuration or I/O
//! error, 3 physics error (open curve, stationary state).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod run;
mod suites;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Io(String),
    #[error("physics error: {0}")]
    Physics(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Physics(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hb",
    version,
    about = "Geometric phases and the time needed to generate them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Grid steps per period (at least 100).
    #[arg(long)]
    steps: Option<usize>,
    /// Seed for the random scenario.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve each configured system over one period and summarize the
    /// trajectory.
    Simulate(RunArgs),
    /// Evaluate the ML, MT and BD time bounds.
    Bounds(RunArgs),
    /// Run a verification suite and print a pass/fail table.
    Verify {
        /// qubit-tightness, qutrit-identities, counterexample,
        /// random-periodic or invariance.
        suite: String,
        /// Grid steps per period; small values are allowed here to probe
        /// convergence.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn closure_from_env() -> Result<Option<f64>, CliError> {
    match std::env::var("HB_TOL_CLOSURE") {
        Ok(v) => {
            let t = config::parse_number(&v).map_err(|e| CliError::Config(format!("HB_TOL_CLOSURE: {e}")))?;
            if !(t > 0.0) {
                return Err(CliError::Config("HB_TOL_CLOSURE must be positive".into()));
            }
            Ok(Some(t))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("HB_TOL_CLOSURE: {e}"))),
    }
}

fn load(args: &RunArgs) -> Result<config::RunConfig, CliError> {
    let overrides = Overrides {
        steps: args.steps,
        seed: args.seed,
        format: args.format,
        out: args.out.clone(),
        closure: closure_from_env()?,
    };
    config::load(&args.config, &overrides)
}

/// Opens the destination before any computation so an unwritable path
/// fails fast.
fn open_sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load(&args)?;
            let sink = open_sink(cfg.out.as_deref())?;
            let rows = run::simulate(&cfg)?;
            output::write_simulate(sink, cfg.format, &rows)?;
            Ok(true)
        }
        Command::Bounds(args) => {
            let cfg = load(&args)?;
            let sink = open_sink(cfg.out.as_deref())?;
            let rows = run::bounds(&cfg)?;
            output::write_bounds(sink, cfg.format, &rows)?;
            Ok(true)
        }
        Command::Verify {
            suite,
            steps,
            seed,
            out,
        } => {
            if !suites::SUITES.contains(&suite.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown suite '{suite}' (expected one of: {})",
                    suites::SUITES.join(", ")
                )));
            }
            let steps = steps.unwrap_or_else(|| suites::default_steps(&suite));
            if steps < 2 {
                return Err(CliError::Config("steps must be at least 2".into()));
            }
            let mut sink = open_sink(out.as_deref())?;
            let report = suites::run(&suite, steps, seed)?;
            writeln!(sink, "{report}").map_err(|e| CliError::Io(e.to_string()))?;
            sink.flush().map_err(|e| CliError::Io(e.to_string()))?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hb: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
