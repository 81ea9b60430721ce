//! The `poisson-hedge` command-line driver.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] poisson_hedge::Error),
}

#[derive(Debug, Parser)]
#[command(name = "poisson-hedge", version, about = "Malliavin calculus and minimal-variance hedging on Poisson processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample paths and dump them as CSV.
    Simulate(Flags),
    /// Clark–Ocone decomposition of a claim, plus the martingale check when `t_grid` is set.
    ClarkOcone(Flags),
    /// Minimal-variance hedge of a claim and its diagnostics.
    Hedge(Flags),
    /// Run the identity suite and write a verdict.
    Verify(Flags),
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Outer paths.
    #[arg(long, value_name = "N")]
    pub paths: Option<usize>,
    /// Inner samples per conditional expectation.
    #[arg(long, value_name = "M")]
    pub inner: Option<usize>,
    #[arg(long, value_name = "K")]
    pub workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Multiplier on standard errors for statistical checks.
    #[arg(long, value_name = "X")]
    pub tolerance: Option<f64>,
}

impl From<&Flags> for Overrides {
    fn from(f: &Flags) -> Self {
        Overrides {
            config: f.config.clone(),
            seed: f.seed,
            paths: f.paths,
            inner: f.inner,
            workers: f.workers,
            out: f.out.clone(),
            tolerance: f.tolerance,
        }
    }
}

/// Runs one subcommand; `Ok(false)` means an identity check failed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let (name, flags) = match &cli.command {
        Command::Simulate(f) => ("simulate", f),
        Command::ClarkOcone(f) => ("clark-ocone", f),
        Command::Hedge(f) => ("hedge", f),
        Command::Verify(f) => ("verify", f),
    };
    let cfg = RunConfig::resolve(name, &flags.into())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    pool.install(|| match &cli.command {
        Command::Simulate(_) => commands::simulate(&cfg).map(|_| true),
        Command::ClarkOcone(_) => commands::clark_ocone(&cfg).map(|_| true),
        Command::Hedge(_) => commands::hedge(&cfg).map(|_| true),
        Command::Verify(_) => verify::run_verify(&cfg),
    })
}

/// Process exit code for a run result: 0 pass, 1 identity failure, 2 usage or config error.
pub fn exit_code(result: &Result<bool, CliError>) -> i32 {
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(_) => 2,
    }
}
