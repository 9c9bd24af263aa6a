//! Command-line front end: config parsing, experiment dispatch and artifact output.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use skl_core::experiments::Suite;

use crate::config::{load_config, Experiment};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] skl_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Exit status when every predicate passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status when the run finished but a predicate failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for config and runtime errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "skl", version, about = "Monte Carlo harness for stochastic conservation laws with Dirichlet data")]
pub struct Cli {
    /// Run configuration (TOML, or JSON for a .json file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides master_seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to SKL_WORKERS, then to the config.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides output_dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate n_paths paths and dump snapshots and energies.
    Solve,
    /// Coupled L1 distance of two problems (needs [data2]).
    Contraction,
    /// Indicator property of the kinetic function across paths.
    Reduction,
    /// Coupled viscosity sweep and energy estimates.
    Sweep,
    /// Kinetic measure tails, boundary traces and defect densities.
    Kinetic,
    /// Deterministic oracle suite: riemann_shock, riemann_rarefaction or boundary_layer.
    Validate { suite: String },
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::Solve => Experiment::Solve,
            Command::Contraction => Experiment::Contraction,
            Command::Reduction => Experiment::Reduction,
            Command::Sweep => Experiment::Sweep,
            Command::Kinetic => Experiment::Kinetic,
            Command::Validate { .. } => Experiment::Validate,
        }
    }
}

fn env_workers() -> Result<Option<usize>, CliError> {
    match std::env::var("SKL_WORKERS") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("SKL_WORKERS must be a nonnegative integer, got `{s}`"))),
        Err(_) => Ok(None),
    }
}

/// Parses and runs; returns the summary path and whether every predicate passed.
pub fn dispatch(cli: &Cli) -> Result<(PathBuf, bool), CliError> {
    let outcome = match &cli.command {
        Command::Validate { suite } => {
            let suite: Suite = suite.parse()?;
            if cli.config.is_some() {
                log::warn!("validate ignores --config");
            }
            run::execute_validation(suite, cli.out.as_deref().unwrap_or("out".as_ref()))?
        }
        cmd => {
            let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
            let mut cfg = load_config(path, cmd.experiment())?;
            if let Some(seed) = cli.seed {
                cfg.master_seed = seed;
            }
            if let Some(w) = cli.workers.or(env_workers()?) {
                cfg.workers = w;
            }
            if let Some(out) = &cli.out {
                cfg.output_dir = out.clone();
            }
            run::execute(&cfg)?
        }
    };
    Ok((outcome.summary_path, outcome.summary.passed))
}

/// Entry point shared by the binary and the tests.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((path, passed)) => {
            println!("{}", path.display());
            if passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
