//! `ptvar`: simulate, estimate and test periodic time-varying AR(1) models.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "ptvar",
    version,
    about = "Kernel estimation for periodic, locally stationary AR(1) processes"
)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the result here instead of stdout; metadata goes to `<output>.json`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a trajectory and write it as `t,x` CSV.
    Simulate(SimulateArgs),
    /// Estimate a_s(u) with asymptotic confidence intervals.
    Estimate(EstimateArgs),
    /// Scan the bandwidth exponent against a known truth for one trajectory.
    MiseScan(MiseScanArgs),
    /// Monte-Carlo bandwidth study over replications.
    Montecarlo(MonteCarloArgs),
    /// Estimate the period by cross-validation.
    PeriodCv(PeriodCvArgs),
    /// Test H0: a_s(u) = c_a.
    Test(TestArgs),
    /// Deseasonalize a series and estimate per-season coefficient profiles.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Name of the time column; pass an empty string to use row order.
    #[arg(long, default_value = "t")]
    time_column: String,
    /// Name of the value column.
    #[arg(long, default_value = "x")]
    value_column: String,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// `cosine`, `wiener-integral`, `fbm:<H>`, `wiener`, or `const:a1,a2,...`.
    #[arg(long, default_value = "cosine")]
    coef: String,
    /// Period T (ignored for `const:`, which takes it from the value count).
    #[arg(long, default_value_t = 2)]
    period: usize,
    /// `gaussian:<variance>` or `student:<dof>`.
    #[arg(long, default_value = "gaussian:4")]
    noise: String,
    /// Seed for the random path behind Brownian test functions (default: --seed).
    #[arg(long)]
    path_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of periods; the series has n*T values.
    #[arg(long)]
    n: usize,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Period T of the series.
    #[arg(long)]
    period: usize,
    /// Season index in 1..=T, or `all`.
    #[arg(long, default_value = "all")]
    season: String,
    /// Comma-separated points in (0,1), or `grid99`.
    #[arg(long, default_value = "grid99")]
    u: String,
    /// Bandwidth value, or `auto` for leave-one-out selection.
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// `epanechnikov` or `gaussian`.
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    ci: f64,
}

#[derive(Debug, Args)]
struct MiseScanArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of periods to simulate.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Scan this trajectory (`t,x` CSV) instead of simulating one.
    #[arg(long)]
    input: Option<PathBuf>,
    /// `epanechnikov` or `gaussian`.
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    /// TOML file with keys coef, period, noise, kernel, n, replications and
    /// optionally seed and path_seed. Flags are ignored when it is given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// `epanechnikov` or `gaussian`.
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Comma-separated sample sizes (periods).
    #[arg(long, default_value = "100,200,500,1000")]
    n: String,
    /// Replications per sample size.
    #[arg(long, default_value_t = 1000)]
    replications: usize,
}

#[derive(Debug, Args)]
struct PeriodCvArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Largest candidate period.
    #[arg(long, default_value_t = 12)]
    t_max: usize,
    /// `loo` (leave-one-out) or `full` (full-sample fits).
    #[arg(long, default_value = "loo")]
    cv_style: String,
    /// `epanechnikov` or `gaussian`.
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Fixed bandwidth; default is N^(-1/3) for a series of length N.
    #[arg(long)]
    bandwidth: Option<f64>,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Period T of the series.
    #[arg(long)]
    period: usize,
    /// Season index in 1..=T, or `all`.
    #[arg(long, default_value = "all")]
    season: String,
    /// Comma-separated points in (0,1).
    #[arg(long, default_value = "0.5")]
    u: String,
    /// Null value c_a.
    #[arg(long)]
    null: f64,
    /// Bandwidth value; default n^(-1/3).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// `epanechnikov` or `gaussian`.
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Period T; estimated by cross-validation when omitted.
    #[arg(long)]
    period: Option<usize>,
    /// Largest candidate period when T is estimated.
    #[arg(long, default_value_t = 12)]
    t_max: usize,
    /// Comma-separated points in (0,1).
    #[arg(long, default_value = "0.25,0.5,0.75")]
    u: String,
    /// Bandwidth value, `auto` for leave-one-out selection, or `default` for n^(-1/5).
    #[arg(long, default_value = "default")]
    bandwidth: String,
    /// `epanechnikov` or `gaussian`.
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Odd moving-average width for the trend (default 2T+1).
    #[arg(long)]
    trend_window: Option<usize>,
    /// Skip trend and seasonal-mean removal.
    #[arg(long)]
    no_deseason: bool,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    ci: f64,
}

fn exit_code(category: &str) -> u8 {
    match category {
        "invalid-argument" => 2,
        "input" => 3,
        "degenerate" => 4,
        "unavailable" => 5,
        _ => 6,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error[invalid-argument]: cannot start {threads} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(e.category()))
        }
    }
}
