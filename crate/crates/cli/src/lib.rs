//! `pedf` command-line driver: synthetic data generation, training,
//! prediction and benchmarking, all driven by one TOML run configuration.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::PredictArgs;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "pedf", version, about = "Predict the remaining events, durations and features of running cases")]
pub struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic event log described by the [generate] section.
    Gen {
        #[arg(long, short)]
        config: PathBuf,
        /// Overrides output.generated.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Train a model on the configured dataset and save it.
    Train {
        #[arg(long, short)]
        config: PathBuf,
        /// Overrides output.model.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Predict the continuation of partial cases with a saved model.
    Predict {
        #[arg(long, short)]
        model: PathBuf,
        /// CSV with the known events of one or more cases.
        #[arg(long, conflicts_with = "events")]
        prefix: Option<PathBuf>,
        /// Known events of a single case, comma separated.
        #[arg(long, value_delimiter = ',')]
        events: Vec<String>,
        /// Run config whose [parse] section maps the prefix CSV columns.
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// Maximum number of predicted events per case.
        #[arg(long, default_value_t = 10)]
        cap: usize,
        /// Add cases with unseen events to the network before predicting.
        #[arg(long)]
        extend: bool,
        /// Sample each step from the classifier with this seed instead of taking the most likely outcome.
        #[arg(long)]
        sample: Option<u64>,
    },
    /// Evaluate the configured model grid across known fractions.
    Bench {
        #[arg(long, short)]
        config: PathBuf,
        /// Overrides bench.cap.
        #[arg(long)]
        cap: Option<usize>,
    },
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool, which only matters in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Gen { config, output } => commands::cmd_gen(&RunConfig::load(&config)?, output, out),
        Command::Train { config, output } => commands::cmd_train(&RunConfig::load(&config)?, output, out),
        Command::Predict { model, prefix, events, config, cap, extend, sample } => {
            let parse = config.map(|c| RunConfig::load(&c)).transpose()?.map(|c| c.parse);
            let args = PredictArgs { model, prefix, events, parse, cap, extend, sample };
            commands::cmd_predict(&args, out, err)
        }
        Command::Bench { config, cap } => commands::cmd_bench(&RunConfig::load(&config)?, cap, out, err),
    }
}
