//! `csl`: runs phase-transition and function-approximation experiments from
//! JSON configs and checks restricted isometry and coherence constants.

pub mod approx;
pub mod config;
pub mod output;
pub mod phase;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] csl_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "csl", version, about = "Sparse-in-levels recovery experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Success probability over an (s, m) grid.
    Phase(RunArgs),
    /// Relative L2 error of function approximation versus m.
    Approx(RunArgs),
    /// Brute-force RIC / RICL and block coherence of one matrix.
    Verify(verify::VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides `seeds.master`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides `model.noise`.
    #[arg(long)]
    pub noise: Option<f64>,
}

/// Runs `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_jobs<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    if jobs == Some(0) {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Phase(args) => phase::cmd_phase(&args).map(|_| ()),
        Command::Approx(args) => approx::cmd_approx(&args).map(|_| ()),
        Command::Verify(args) => {
            let report = verify::cmd_verify(&args)?;
            print!("{}", report.render());
            Ok(())
        }
    }
}
