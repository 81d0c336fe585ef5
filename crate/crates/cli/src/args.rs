use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use imflow_core::mlp::Activation;
use imflow_core::{BinStrategy, Mode};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "imflow",
    version,
    about = "Information-matrix analysis of discrete transformations and MLP layer chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Information matrix, constraints and pattern of a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Exact (and optionally sampled) analysis of a configured channel.
    Simulate(SimulateArgs),
    /// Train an MLP and measure its layer chain at snapshot epochs.
    TrainChain(TrainChainArgs),
    /// Objective values and argmin sets over an alpha/beta grid.
    ObjectiveSweep(SweepArgs),
    /// Compare backpropagated and finite-difference gradients.
    GradCheck(GradCheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Simulate(_) => "simulate",
            Command::TrainChain(_) => "train-chain",
            Command::ObjectiveSweep(_) => "objective-sweep",
            Command::GradCheck(_) => "grad-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Det,
    Stoch,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Det => Mode::Deterministic,
            ModeArg::Stoch => Mode::Stochastic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Uniform,
    Quantile,
}

impl From<StrategyArg> for BinStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Uniform => BinStrategy::Uniform,
            StrategyArg::Quantile => BinStrategy::Quantile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationArg {
    Sigmoid,
    Tanh,
    Relu,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Sigmoid => Activation::Sigmoid,
            ActivationArg::Tanh => Activation::Tanh,
            ActivationArg::Relu => Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Directory for output files; the report goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// CSV dataset with a header row.
    pub dataset: PathBuf,
    /// Source columns (comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
    /// Transformation output columns (comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<String>,
    /// Target column.
    #[arg(long, required = true)]
    pub y: String,
    /// Treat X and T values as exact categories instead of binning them.
    #[arg(long)]
    pub categorical: bool,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Det)]
    pub mode: ModeArg,
    /// Range-check tolerance in bits.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Pattern-label tolerance on normalized diagram coordinates.
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// JSON scenario configuration.
    pub config: PathBuf,
    /// Overrides the configured sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to deterministic unless the exact joint has H(T|X) > tol.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainChainArgs {
    /// CSV dataset with numeric inputs and one binary target column.
    pub dataset: PathBuf,
    /// Target column.
    #[arg(long, required = true)]
    pub y: String,
    /// Input columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<String>,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "6,3")]
    pub hidden: Vec<usize>,
    /// One activation for all hidden layers, or one per hidden layer.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sigmoid")]
    pub activation: Vec<ActivationArg>,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long = "lr", default_value_t = 1.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Snapshot epochs; defaults to the initial and final models.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    /// Hidden layers wider than this are measured on their first units.
    #[arg(long, default_value_t = 8)]
    pub max_units: usize,
    /// Chain monotonicity tolerance in bits.
    #[arg(long, default_value_t = 0.05)]
    pub chain_eps: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Det)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    /// Fraction of rows held out for measurement; 0 measures on the training set.
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// JSON candidate family.
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,0.9")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    pub betas: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GradCheckArgs {
    /// Layer widths including input and output.
    #[arg(long, value_delimiter = ',', default_value = "4,6,3,1")]
    pub widths: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ActivationArg::Sigmoid)]
    pub activation: ActivationArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    /// Random samples drawn when no dataset is given.
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
    /// Optional CSV dataset; needs --y.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<String>,
    /// Relative errors at or above this exit with status 4.
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
