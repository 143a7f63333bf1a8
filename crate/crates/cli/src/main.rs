//! `bsrf`: train, apply and evaluate best-scored random forests.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use bsrf_core::{Mode, StrategyKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bsrf", version, about = "Best-scored random forests")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a forest on a CSV file and write a model file.
    Train(TrainArgs),
    /// Predict labels for the rows of a CSV file.
    Predict(PredictArgs),
    /// Repeated train/test evaluation with a hyperparameter grid search.
    Benchmark(BenchmarkArgs),
    /// Restricted versus full forest on the parity cube.
    Counterexample(CounterexampleArgs),
    /// Cell size of purely random partitions as the split count grows.
    Geometry(GeometryArgs),
}

/// Forest hyperparameters. Comma-separated lists form a grid for
/// `benchmark`; other subcommands take one value each.
#[derive(Args, Debug, Default)]
pub struct ForestArgs {
    /// Trees per forest (m).
    #[arg(long, value_delimiter = ',')]
    pub trees: Vec<usize>,
    /// Candidate trees per forest member (k).
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<usize>,
    /// Penalty weight of the regularized strategy.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Splits per tree (p) for the cv strategy.
    #[arg(long, value_delimiter = ',')]
    pub splits: Vec<usize>,
    /// Half-width a of the cut distribution Unif[0.5 - a, 0.5 + a].
    #[arg(long, value_delimiter = ',')]
    pub cut_width: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub mode: Vec<Mode>,
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<StrategyKind>,
    /// Folds used to score candidates under the cv strategy.
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Raw label value mapped to +1 (default: the larger of the two).
    #[arg(long)]
    pub positive_label: Option<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CSV to score.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Column to ignore when the file carries labels.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Predictions CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random train/test splits.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Folds of the grid search inside each training split.
    #[arg(long)]
    pub search_folds: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Data set name in the report (default: file stem).
    #[arg(long)]
    pub name: Option<String>,
    /// Directory receiving summary.csv, repeats.csv and table.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cube dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Training vertices per trial.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Test vertices per trial (default: same as --samples).
    #[arg(long)]
    pub test_samples: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Axes the restricted forest may split, with multiplicity.
    #[arg(long, value_delimiter = ',')]
    pub restricted_dims: Vec<usize>,
    /// Per-trial CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GeometryArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Split counts to measure.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<usize>,
    /// Partitions per split count.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub cut_width: Option<f64>,
    /// Output CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain joined by `: `, skipping causes a parent already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut message = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if message.ends_with(&text) {
            continue;
        }
        if !message.is_empty() {
            message.push_str(": ");
        }
        message.push_str(&text);
    }
    message
}
