//! `stokeswim` command-line front end.
//!
//! ```text
//! stokeswim run --config experiment.json --out results/ [--seed N] [--dt H] [--quiet]
//! ```
//!
//! Exit status: 0 on success, 1 on a runtime failure, 2 on an invalid
//! configuration, 3 when a plan did not converge.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use stokeswim::SwimError;

use config::ExperimentConfig;
use experiments::{run, RunContext};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Swim(SwimError),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        experiments::io_error(path, e)
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Swim(
                SwimError::InvalidInput(_)
                | SwimError::PreconditionViolation(_)
                | SwimError::InfeasibleOptions(_)
                | SwimError::IndexOutOfRange { .. },
            ) => 2,
            _ => 1,
        }
    }
}

impl From<SwimError> for CliError {
    fn from(e: SwimError) -> Self {
        CliError::Swim(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "stokeswim", version, about = "Low-Reynolds-number N-link swimmer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output.dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the integration step.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        quiet: bool,
        /// Caps the number of worker threads.
        #[arg(long, env = "STOKESWIM_THREADS", hide_env_values = true)]
        threads: Option<usize>,
    },
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let Command::Run {
        config,
        out,
        seed,
        dt,
        quiet,
        threads,
    } = cli.command;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("STOKESWIM_THREADS: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let ctx = RunContext {
        out_dir: out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from(".")),
        prefix: cfg
            .output
            .prefix
            .clone()
            .unwrap_or_else(|| cfg.experiment.name().to_string()),
        seed: seed.unwrap_or(cfg.seed),
        dt,
    };
    let summary = run(&cfg, &ctx)?;
    if !quiet {
        println!("{}", summary.message);
        for a in &summary.artifacts {
            println!("wrote {}", a.display());
        }
    }
    Ok(summary.converged)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: plan did not converge");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
