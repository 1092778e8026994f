//! `ctbn`: generate ground-truth models, run active-learning comparisons,
//! score trajectory sets and demonstrate smoothing of noisy observations.

mod commands;
mod config;
mod error;

use clap::{Args, Parser, Subcommand};
use config::{resolve, LoadedFile, Overrides};
use ctbn_core::design::{Strategy, Target};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ctbn", version, about = "Active learning of continuous-time Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a ground-truth model and, with `num_trajectories`, sample paths.
    Generate(Common),
    /// Run active-learning sequences for each strategy.
    Run(Common),
    /// Score a trajectory file exhaustively over parent sets.
    Score(Common),
    /// Smooth a noisy partially observed path of the model.
    FilterDemo(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in ground truth: synthetic-structure or synthetic-parameters.
    #[arg(long)]
    preset: Option<String>,
    /// Model document to use as ground truth.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Comma-separated strategies: passive, random, bhc, vbhc, neg-vbhc, eig.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// parameters or structure.
    #[arg(long)]
    target: Option<Target>,
    /// Experiments per repetition.
    #[arg(long, short = 'K')]
    steps: Option<usize>,
    /// Independent repetitions.
    #[arg(long, short = 'R')]
    reps: Option<usize>,
    /// Trajectory length.
    #[arg(long)]
    horizon: Option<f64>,
    /// Posterior samples per criterion evaluation.
    #[arg(long)]
    samples: Option<usize>,
    /// Master seed for every random stream of the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
    /// Trajectory file (score).
    #[arg(long)]
    trajectories: Option<PathBuf>,
    /// Observation document (filter-demo).
    #[arg(long)]
    observations: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            model: self.model.clone(),
            strategies: self.strategies.clone(),
            target: self.target,
            steps: self.steps,
            repetitions: self.reps,
            horizon: self.horizon,
            samples: self.samples,
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
            trajectories: self.trajectories.clone(),
            observations: self.observations.clone(),
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (common, action): (&Common, fn(&config::Settings) -> Result<(), CliError>) = match &cli.command {
        Command::Generate(c) => (c, commands::generate),
        Command::Run(c) => (c, commands::run),
        Command::Score(c) => (c, commands::score),
        Command::FilterDemo(c) => (c, commands::filter_demo),
    };
    let file = common.config.as_deref().map(LoadedFile::read).transpose()?;
    let settings = resolve(file.as_ref(), &common.overrides())?;
    if settings.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(settings.workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", settings.workers)))?;
    }
    action(&settings)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
