//! Command-line driver: configuration, pipeline execution, and report
//! emission for the robust-inflation engine.

mod commands;
mod config;
mod output;
mod synth;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Errors mapped onto process exit codes: 2 for configuration problems,
/// 3 for data problems, 4 for internal failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(inflatrim::Error),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Data(err) => write!(f, "data: {err}"),
            CliError::Internal(msg) => write!(f, "internal: {msg}"),
        }
    }
}

impl From<inflatrim::Error> for CliError {
    fn from(err: inflatrim::Error) -> Self {
        CliError::Data(err)
    }
}

#[derive(Parser)]
#[command(
    name = "inflatrim",
    version,
    about = "Robust inflation series, trend targets, and trim grid search over a category panel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Panel CSV (date,category_id,price_index,nominal_expenditure).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Tag CSV (category_id,tag).
    #[arg(long)]
    pub tags: Option<PathBuf>,
    /// Official series CSV for replication reports.
    #[arg(long)]
    pub official: Option<PathBuf>,
    /// Output directory (also settable via INFLATRIM_OUT).
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
    /// Exclude categories carrying this tag (repeatable).
    #[arg(long = "exclude")]
    pub exclusions: Vec<String>,
    /// Evaluation sample START:END, e.g. 1970-01:2022-10 (repeatable).
    #[arg(long = "sample")]
    pub samples: Vec<String>,
    /// Target trend by label with default calibration (repeatable).
    #[arg(long = "target")]
    pub targets: Vec<String>,
    /// Grid bound on the lower trim.
    #[arg(long)]
    pub alpha_max: Option<u8>,
    /// Grid bound on the upper trim.
    #[arg(long)]
    pub beta_max: Option<u8>,
    /// Significance level for equivalence sets.
    #[arg(long)]
    pub dm_level: Option<f64>,
    /// Top-k set size for prediction ranges (repeatable).
    #[arg(long = "top-k")]
    pub top_k: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// headline | core | trimmed | median | percentile
    #[arg(long, default_value = "trimmed")]
    pub kind: String,
    /// Trim pair ALPHA,BETA for --kind trimmed.
    #[arg(long)]
    pub trim: Option<String>,
    /// Percentile in (0,1) for --kind percentile.
    #[arg(long)]
    pub pct: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DiagnosticsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trim pair for the inclusion report.
    #[arg(long)]
    pub trim: Option<String>,
    /// Rolling standard-deviation window, months.
    #[arg(long, default_value_t = 24)]
    pub sd_window: usize,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    pub categories: usize,
    #[arg(long, default_value_t = 360)]
    pub months: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Cross-category sd of monthly log price relatives.
    #[arg(long, default_value_t = 0.01)]
    pub dispersion: f64,
    /// First panel month.
    #[arg(long, default_value = "1960-01")]
    pub start: String,
    /// Panel CSV destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional tag-file destination.
    #[arg(long)]
    pub tags_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one inflation series.
    Series(SeriesArgs),
    /// Compute the configured trend targets from headline inflation.
    Trend(CommonArgs),
    /// Score headline / official trimmed / median series per target and sample.
    Evaluate(CommonArgs),
    /// Sweep the full trim grid: heatmaps, best trims, equivalence sets.
    Grid(CommonArgs),
    /// Prediction ranges for equivalence and top-k trim sets.
    Ranges(CommonArgs),
    /// Panel validation, regime summaries, rolling sd, inclusion, sign match.
    Diagnostics(DiagnosticsArgs),
    /// Generate a deterministic synthetic panel fixture.
    Synth(SynthArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Series(args) => commands::series(args),
        Command::Trend(args) => commands::trend_cmd(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Grid(args) => commands::grid_cmd(args),
        Command::Ranges(args) => commands::ranges(args),
        Command::Diagnostics(args) => commands::diagnostics(args),
        Command::Synth(args) => commands::synth(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
