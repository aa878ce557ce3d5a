//! `varcpd`: online change-point detection for multivariate series from the command line.

mod commands;
mod config;
mod csvio;
mod error;
mod log;
mod simspec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use varcpd_core::VarianceMode;

use crate::config::ConfigFile;

#[derive(Debug, Parser)]
#[command(name = "varcpd", version, about = "Online change-point detection for sparse VAR series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on the head of a series file and monitor the rest.
    Monitor(RunArgs),
    /// Fit a baseline only and write it as JSON.
    Fit(RunArgs),
    /// Simulate a series from a regime spec.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study and write raw and summary tables.
    Bench(BenchArgs),
}

/// Flags mirror the config-file keys; a flag overrides the key.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Series file (`-` for stdin).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report (monitor) or baseline (fit) path; stdout when unset.
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON-lines event log.
    #[arg(long)]
    alarm_log: Option<PathBuf>,
    /// Comma-separated column names to use.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long, env = "VARCPD_SEED")]
    seed: Option<u64>,
    /// Training responses per baseline.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lag: Option<usize>,
    /// Select the lag by BIC from 1..=max_lag.
    #[arg(long)]
    max_lag: Option<usize>,
    /// Fixed lasso penalty instead of cross-validation.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    omega: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    refine_ratio: Option<f64>,
    #[arg(long)]
    confirm: Option<bool>,
    #[arg(long, value_parser = parse_mode)]
    variance_mode: Option<VarianceMode>,
    /// Refit after each confirmed alarm.
    #[arg(long)]
    retrain: Option<bool>,
    #[arg(long)]
    min_spacing_hint: Option<usize>,
    /// Log every statistic, not only alarms.
    #[arg(long)]
    statistics: Option<bool>,
}

fn parse_mode(s: &str) -> Result<VarianceMode, String> {
    match s {
        "homogeneous" => Ok(VarianceMode::Homogeneous),
        "heterogeneous" => Ok(VarianceMode::Heterogeneous),
        _ => Err(format!("expected homogeneous or heterogeneous, got {s:?}")),
    }
}

impl RunArgs {
    fn resolve(self) -> error::CliResult<ConfigFile> {
        let file = ConfigFile::load_or_default(self.config.as_deref())?;
        let flags = ConfigFile {
            schema: None,
            input: self.input,
            output: self.output,
            alarm_log: self.alarm_log,
            columns: self.columns,
            seed: self.seed,
            n: self.n,
            lag: self.lag,
            max_lag: self.max_lag,
            lambda: self.lambda,
            omega: self.omega,
            alpha: self.alpha,
            refine_ratio: self.refine_ratio,
            confirm: self.confirm,
            variance_mode: self.variance_mode,
            retrain: self.retrain,
            min_spacing_hint: self.min_spacing_hint,
            statistics: self.statistics,
        };
        Ok(file.overlay(flags))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Regime spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long, env = "VARCPD_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// run_length, delay, window_sweep, refine or multicp.
    #[arg(long)]
    scenario: String,
    /// TOML file with parameter lists; flags override its keys.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Directory for `<scenario>_raw.csv` and `<scenario>_summary.csv`.
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, env = "VARCPD_SEED")]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    omega: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    jump: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    refine_ratio: Option<Vec<f64>>,
    #[arg(long)]
    confirm: Option<bool>,
    #[arg(long)]
    heterogeneous: Option<bool>,
    #[arg(long)]
    monitored: Option<usize>,
    #[arg(long)]
    sparsity: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Monitor(args) => args.resolve().and_then(commands::monitor),
        Command::Fit(args) => args.resolve().and_then(commands::fit),
        Command::Simulate(args) => commands::simulate(args),
        Command::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("varcpd: {e}");
            e.exit_code()
        }
    }
}
