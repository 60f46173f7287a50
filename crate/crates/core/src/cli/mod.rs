//! Command-line front end: `pretrain`, `train`, `eval`, `rollout`, `gen-suite`, `gen-dataset`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure, 3 training halted
//! on divergence.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
pub mod config;

pub use config::{Config, SuiteKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("training halted: {message}")]
    Divergence {
        message: String,
        last_checkpoint: Option<PathBuf>,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Divergence { .. } => 3,
        }
    }

    pub(crate) fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "crowdnav",
    version,
    about = "Multi-agent collision avoidance with a learned LSTM policy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `seed` from the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Override one configuration key, e.g. `--set train.learning_rate=1e-4`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Take the most probable action (default for eval and rollout).
    #[arg(long, global = true, conflicts_with = "sample")]
    pub greedy: bool,
    /// Sample actions from the policy distribution.
    #[arg(long, global = true)]
    pub sample: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Behaviour-clone the scripted expert and write `pretrain.ckpt`.
    Pretrain {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reinforcement learning with the two-phase curriculum.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint to start or resume from; fresh weights when absent.
        #[arg(long)]
        init: Option<PathBuf>,
        /// Stop after this many further episodes.
        #[arg(long)]
        max_episodes: Option<u64>,
    },
    /// Run policies on a test suite and write outcomes plus a comparison report.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Suite file written by `gen-suite`; generated from `[suite]` when absent.
        #[arg(long)]
        suite: Option<PathBuf>,
        /// A checkpoint path or one of `non_cooperative`, `zero_velocity`, `scripted`.
        #[arg(long = "policy", required = true)]
        policies: Vec<String>,
    },
    /// Run one episode and write its full trajectory.
    Rollout {
        #[command(flatten)]
        common: CommonArgs,
        /// A checkpoint path or one of `non_cooperative`, `zero_velocity`, `scripted`.
        #[arg(long)]
        policy: String,
        /// Scenario or suite file; built from `[suite]` when absent.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Index of the case within the scenario file.
        #[arg(long, default_value_t = 0)]
        case: usize,
    },
    /// Generate a reproducible test suite from `[suite]`.
    GenSuite {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write the supervised dataset as JSON lines.
    GenDataset {
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Parses `args` (including the program name) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Divergence {
                last_checkpoint: Some(p),
                ..
            } = &e
            {
                eprintln!("last good checkpoint: {}", p.display());
            }
            e.exit_code()
        }
    }
}
