use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "shiftlab", version, about = "Covers, hitting times and cover times on countable full shifts")]
pub struct Cli {
    /// JSON file with default settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Master seed. Falls back to the config file, then SHIFTLAB_SEED, then 7.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for simulations.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the alphabet cover and product cover at one scale.
    Cover(CoverArgs),
    /// Cylinder, cell and minimal-cell masses.
    Measure(MeasureArgs),
    /// Monte Carlo hitting, cover, return and tail experiments.
    Simulate(SimulateArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
    /// CSV report over a grid of scales.
    Report(ReportArgs),
}

#[derive(Debug, Args, Default)]
pub struct MetricArgs {
    /// d1 or d2.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Exponent of the d2 base metric.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Largest product cover allowed.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Run the randomized ball-sandwich test with this many samples per side.
    #[arg(long, value_name = "N")]
    pub verify_sandwich: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// geometric or powerlaw:KAPPA.
    #[arg(long)]
    pub model: Option<String>,
    /// Mass of the cylinder of this word, e.g. 1,1,1.
    #[arg(long, value_name = "WORD")]
    pub cell_word: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Mass of a product cell given as a tuple of alphabet-cell indices.
    #[arg(long, value_name = "TUPLE")]
    pub cell: Option<String>,
    /// Lightest product cell at --delta.
    #[arg(long)]
    pub min_cell: bool,
    /// Bracket of the minimal ball mass at --delta.
    #[arg(long)]
    pub mmin: bool,
    /// Check the potential envelope with this exponent.
    #[arg(long, value_name = "KAPPA")]
    pub gibbs_check: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub n_max: u64,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Hit,
    Cover,
    Kac,
    Tail,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub kind: SimKind,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Target cell: `worst` (lightest) or a tuple such as 0,0,0.
    #[arg(long)]
    pub cell: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Survival grid for `tail`.
    #[arg(long, value_name = "N,N,...")]
    pub grid: Option<String>,
    /// Estimate both sides of the cover-time bracket instead of the single cover.
    #[arg(long)]
    pub bracket: bool,
    /// Write one JSON line per trial.
    #[arg(long, value_name = "FILE")]
    pub jsonl: Option<PathBuf>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// all, kac, psi, counts, sandwich, bounds or dim.
    #[arg(default_value = "all")]
    pub suite: String,
    /// Models for the psi suite; repeatable.
    #[arg(long)]
    pub model: Vec<String>,
    /// Scales for the dim suite, strictly decreasing.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated scales.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Defaults to 1/(2T).
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
