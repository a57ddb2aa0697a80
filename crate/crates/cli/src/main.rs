// SPDX-License-Identifier: MIT OR Apache-2.0

//! `steptransfer` command-line tool.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

/// Environment variable that caps the worker thread count.
const THREADS_ENV: &str = "STEPTRANSFER_THREADS";

#[derive(Parser, Debug)]
#[command(name = "steptransfer", version, about = "Piecewise-constant estimation with transfer from higher-frequency sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the target mean on the target grid.
    Estimate(EstimateArgs),
    /// Detect which sources agree with the target.
    Select(SelectArgs),
    /// Run a seeded Monte-Carlo benchmark.
    Simulate(SimulateArgs),
    /// Print K times the harmonic mean of the first K source lengths.
    BenchFrequency(FrequencyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    TargetOnly,
    Unisource,
    Multisource,
    Affine,
    TargetUnisource,
    TargetMultisource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    L1,
    L0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TauMode {
    Theoretical,
    Permutation,
}

#[derive(Args, Debug, Clone)]
pub struct DetectionArgs {
    /// Threshold rule for source detection.
    #[arg(long, value_enum, default_value = "permutation")]
    pub tau: TauMode,
    /// Known changepoint count for the theoretical rules; omitted means unknown.
    #[arg(long)]
    pub s0: Option<usize>,
    /// Absolute constant of the theoretical rules.
    #[arg(long, default_value_t = 1.0)]
    pub constant: f64,
    /// Screening width; defaults to 50 for permutation and the theoretical width otherwise.
    #[arg(long)]
    pub width: Option<usize>,
    /// Permutation replicates.
    #[arg(long, default_value_t = 100)]
    pub permutations: usize,
    /// Permutation quantile level.
    #[arg(long, default_value_t = 0.95)]
    pub quantile: f64,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Target CSV.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Source CSV; repeat for several sources (indexed 1, 2, ... in order).
    #[arg(long = "source")]
    pub sources: Vec<PathBuf>,
    /// Target length for source-only methods run without a target file.
    #[arg(long)]
    pub n0: Option<usize>,
    #[arg(long, value_enum, default_value = "multisource")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "l0")]
    pub penalty: PenaltyArg,
    /// A number, `cv`, or `theoretical`.
    #[arg(long, default_value = "cv")]
    pub lambda: String,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Multisource set: `all`, `detect`, or indices such as `1,3`.
    #[arg(long, default_value = "all")]
    pub select: String,
    /// Left-inverse matrix CSV (n0 rows, n1 columns) for the affine method.
    #[arg(long)]
    pub left_inverse: Option<PathBuf>,
    #[command(flatten)]
    pub detection: DetectionArgs,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long = "source", required = true)]
    pub sources: Vec<PathBuf>,
    #[command(flatten)]
    pub detection: DetectionArgs,
    /// Also print the refined subset.
    #[arg(long)]
    pub refine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConfigArg {
    #[value(name = "1")]
    Deterministic,
    #[value(name = "2")]
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    #[value(name = "1")]
    Equal,
    #[value(name = "2")]
    Unequal,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "1")]
    pub scenario: ScenarioArg,
    #[arg(long, value_enum, default_value = "1")]
    pub config: ConfigArg,
    /// Pin n0 = 200, n_k = 400, sigma = 0.5 and K = 10.
    #[arg(long)]
    pub paper_exact: bool,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long)]
    pub n0: Option<usize>,
    /// Source length; defaults to 2 n0.
    #[arg(long)]
    pub nk: Option<usize>,
    /// Number of sources.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Size of the informative set {1, ..., a}.
    #[arg(long, default_value_t = 8)]
    pub a: usize,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha_tilde: f64,
    #[arg(long, default_value_t = 0.2)]
    pub kappa: f64,
    #[arg(long, default_value_t = 5.0)]
    pub kappa_tilde: f64,
    /// Fraction of each source carrying the discrepancy.
    #[arg(long, default_value_t = 0.15)]
    pub h: f64,
    #[arg(long, default_value_t = 0.0)]
    pub rho_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub rho_delta: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Comma-separated method names such as `l0-T-Ahat`; defaults to the standard ten.
    #[arg(long)]
    pub methods: Option<String>,
    /// Fixed penalty level instead of cross-validation.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub width: usize,
    #[arg(long, default_value_t = 100)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0.95)]
    pub quantile: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-trial results CSV.
    #[arg(long, default_value = "results.csv")]
    pub results: PathBuf,
    /// Per-method summary CSV.
    #[arg(long, default_value = "summary.csv")]
    pub summary: PathBuf,
}

#[derive(Args, Debug)]
pub struct FrequencyArgs {
    /// Source lengths in order; defaults to 200 (11 - k) for k = 1..10.
    #[arg(long, value_delimiter = ',')]
    pub lens: Vec<usize>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = configure_threads().and_then(|()| match cli.command {
        Command::Estimate(args) => commands::estimate(&args),
        Command::Select(args) => commands::select(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::BenchFrequency(args) => commands::bench_frequency(&args),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
