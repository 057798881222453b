//! Command-line front end: file formats, run configuration, result records
//! and the subcommands of the `mpss` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod record;

pub use error::{CliError, Result};

use clap::{Parser, Subcommand};
use commands::Context;
use config::RunConfig;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "mpss", version, about = "State-space estimation of latent sources and MVAR connectivity")]
pub struct Args {
    /// Run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replications, folds and grid points.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run the alternating solvers past the size guardrail.
    #[arg(long, global = true)]
    pub force: bool,
    /// Output directory (default: `[io] out`, else the current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a preset scenario and write X, Y, A, B and a manifest.
    Simulate,
    /// Fit one solver to observations.
    Fit {
        /// Observations (`M x T` or `M x T x E`).
        y: Option<PathBuf>,
        /// Lead field (`M x N`).
        b: Option<PathBuf>,
    },
    /// Cross-validated grid search over the configured axes.
    Cv { y: Option<PathBuf>, b: Option<PathBuf> },
    /// Score an estimate against ground truth.
    Eval {
        x_hat: Option<PathBuf>,
        truth: Option<PathBuf>,
        /// Length of the saliency list.
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Monte Carlo replications of a scenario for one or more solvers.
    Mc,
    /// Convert between CSV and MPSS1 (rank 2 at most).
    Convert { input: PathBuf, output: PathBuf },
}

/// Execute a parsed command line. Returns the files written.
pub fn run(args: &Args) -> Result<Vec<PathBuf>> {
    if let Command::Convert { input, output } = &args.command {
        return commands::cmd_convert(input, output);
    }
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let ctx = Context::new(config, args.out.clone(), args.force)?;
    let work = || match &args.command {
        Command::Simulate => commands::cmd_simulate(&ctx),
        Command::Fit { y, b } => commands::cmd_fit(&ctx, y.as_deref(), b.as_deref()),
        Command::Cv { y, b } => commands::cmd_cv(&ctx, y.as_deref(), b.as_deref()),
        Command::Eval { x_hat, truth, top_k } => commands::cmd_eval(&ctx, x_hat.as_deref(), truth.as_deref(), *top_k),
        Command::Mc => commands::cmd_mc(&ctx),
        Command::Convert { .. } => unreachable!(),
    };
    match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?
            .install(work),
        None => work(),
    }
}
