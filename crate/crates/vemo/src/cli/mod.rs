//! Operator surface: `generate`, `preprocess`, `train`, `eval`, `sweep`.
//!
//! Every command is driven by one TOML config (all fields optional) and is
//! idempotent: identical config and inputs produce byte-identical outputs.
//! Exit codes: 0 success, 2 input error, 3 validation error, 4 artifact
//! mismatch, 1 internal.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_eval, cmd_generate, cmd_preprocess, cmd_sweep, cmd_train};
pub use config::{
    ExperimentConfig, PathsConfig, PreprocessConfig, SplitConfig, SweepConfig, SynthConfig,
};

use crate::Result;

#[derive(Debug, Parser)]
#[command(
    name = "vemo",
    about = "Data-driven one-step vehicle dynamics modelling pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment config (TOML). Defaults to ./vemo.toml when present,
    /// otherwise built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override both the data-generation and training seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Bound internal parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate training and test telemetry and write CSVs.
    Generate,
    /// Filter, scale and window the telemetry into dataset caches.
    Preprocess,
    /// Train the network on the training-cutoff cache.
    Train,
    /// One-step evaluation of the trained checkpoint.
    Eval,
    /// Cross-cutoff noise-robustness sweep.
    Sweep,
}

/// Resolve the effective config from the CLI arguments.
pub fn effective_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let default_path = PathBuf::from("vemo.toml");
            if default_path.is_file() {
                ExperimentConfig::load(&default_path)?
            } else {
                ExperimentConfig::default()
            }
        }
    };
    if let Some(seed) = cli.seed {
        cfg.synth.seed = seed;
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // Ignore the error if a pool already exists; results are
        // thread-count independent anyway.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = effective_config(cli)?;
    match cli.command {
        Command::Generate => cmd_generate(&cfg),
        Command::Preprocess => cmd_preprocess(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Eval => cmd_eval(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
    }
}

/// Parse `std::env::args`, run, and map errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
