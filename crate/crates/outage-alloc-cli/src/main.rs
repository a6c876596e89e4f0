//! Experiment runner for the outage-minimizing power schedulers.
//!
//! ```text
//! outage-alloc --experiment fig3 --out reports/fig3
//! outage-alloc --config exp.toml --experiment fig5 --out reports/fig5 --seed 7 --trials 100000
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical or search
//! failure, 4 resource cap exceeded.

mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{parse_config, Config, Resolved};
use experiments::Runner;

#[derive(Debug, Parser)]
#[command(name = "outage-alloc", version, about = "Outage-minimizing power schedule experiments")]
struct Args {
    /// TOML configuration file; built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment to run: fig3 | fig4 | fig5 | custom.
    #[arg(long)]
    experiment: String,
    /// Report directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Simulation seed; overrides the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials; overrides the configuration file.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Resource(String),
}

impl CliError {
    fn config(e: outage_alloc::Error) -> Self {
        CliError::Config(e.to_string())
    }

    fn numerical(e: outage_alloc::Error) -> Self {
        CliError::Numerical(e.to_string())
    }

    /// Map a library error by kind: resource caps keep their own exit code,
    /// everything else at run time is a numerical failure.
    fn from_lib(e: outage_alloc::Error) -> Self {
        match e {
            outage_alloc::Error::Resource(msg) => CliError::Resource(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
            CliError::Resource(_) => ExitCode::from(4),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Resource(msg) => write!(f, "resource cap: {msg}"),
        }
    }
}

const DEFAULT_SEED: u64 = 7;
const DEFAULT_TRIALS: u64 = 100_000;

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn run(args: Args) -> Result<(), CliError> {
    let config: Config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    // Precedence: command line over file over defaults.
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let trials = args.trials.or(config.trials).unwrap_or(DEFAULT_TRIALS);
    let runner = Runner {
        out_dir: args.out,
        resolved: Resolved { experiment: args.experiment, seed, trials, config },
    };
    runner.run()
}
