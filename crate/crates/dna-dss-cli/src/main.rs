//! Command-line entry point: simulation, analysis, predictions, exact oracles,
//! Gumbel goodness-of-fit, and manifest replay, with JSON/CSV outputs.
//!
//! Exit codes: 0 success, 2 bad flags or unparseable inputs, 3 budget
//! violations, 4 oracle mismatch under `analyze --brute-check`, 1 I/O failure.

mod emit;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    OracleMismatch(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
            CliError::OracleMismatch(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dna-dss", version, about = "Recovery-time experiments for erasure-coded DNA storage containers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a recovery process and aggregate trial statistics
    Simulate(SimulateArgs),
    /// Compute the bad-blocks report of a code with one failed container
    Analyze(AnalyzeArgs),
    /// Evaluate a closed-form expectation or upper bound
    Predict(PredictArgs),
    /// Exact expected recovery time of a tiny instance
    Exact(ExactArgs),
    /// Kolmogorov-Smirnov distance of normalized samples from a Gumbel law
    GumbelCheck(GumbelCheckArgs),
    /// Re-run the command recorded in a manifest file
    Manifest(ManifestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    /// Independent coupon collectors (max of m, l copies each)
    Ccp,
    /// Scalar MDS matrix process (m needed per row, rho spare columns)
    Scalar,
    /// Array-code block process (code + failed container)
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictProcessArg {
    Scalar,
    Corollary,
    Ccp,
    Regen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub process: ProcessArg,
    /// Strands per container
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub trials: u64,
    /// Master seed; every trial derives its own stream from (seed, trial index)
    #[arg(long)]
    pub seed: u64,
    /// Copies required of each strand (ccp)
    #[arg(long)]
    pub l: Option<u32>,
    /// Collectors (ccp) or survivors needed per row (scalar)
    #[arg(long)]
    pub m: Option<u32>,
    /// Spare columns beyond m (scalar)
    #[arg(long)]
    pub rho: Option<u32>,
    /// Code spec: built-in token or JSON file path (array)
    #[arg(long)]
    pub code: Option<String>,
    /// Failed container, 1-based (array)
    #[arg(long)]
    pub p: Option<u32>,
    /// json: aggregate record; csv: raw samples, one integer per line
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write raw samples (one integer per line)
    #[arg(long)]
    pub emit_samples: Option<PathBuf>,
    /// Also write normalized samples as "trial,z" lines
    #[arg(long)]
    pub emit_z: Option<PathBuf>,
    /// Worker threads (default: rayon's choice; env DSS_THREADS as fallback)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Record a replayable manifest of this run
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Code spec: built-in token or JSON file path
    #[arg(long)]
    pub code: String,
    /// Failed container, 1-based
    #[arg(long)]
    pub p: u32,
    /// Also run the codeword-enumeration oracle and fail on mismatch
    #[arg(long)]
    pub brute_check: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub process: PredictProcessArg,
    #[arg(long)]
    pub n: u64,
    /// Survivors needed per row (scalar) or collectors (ccp)
    #[arg(long)]
    pub m: Option<u32>,
    /// Spare columns (scalar)
    #[arg(long)]
    pub rho: Option<u32>,
    /// Copies required (ccp)
    #[arg(long)]
    pub l: Option<u32>,
    /// Container count M (corollary)
    #[arg(long)]
    pub containers: Option<u32>,
    /// Redundancy r (corollary)
    #[arg(long)]
    pub r: Option<u32>,
    /// Code spec for the regenerating bound (regen)
    #[arg(long)]
    pub code: Option<String>,
    /// Failed container (regen)
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub process: ProcessArg,
    #[arg(long)]
    pub n: u64,
    /// Copies required (ccp); with --m 1 this is the l-copy collector chain
    #[arg(long)]
    pub l: Option<u32>,
    /// Collectors (ccp) or survivors needed per row (scalar)
    #[arg(long)]
    pub m: Option<u32>,
    /// Spare columns (scalar)
    #[arg(long)]
    pub rho: Option<u32>,
    /// Code spec (array)
    #[arg(long)]
    pub code: Option<String>,
    /// Failed container (array)
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GumbelCheckArgs {
    /// CSV of normalized samples: "trial,z" lines or one value per line
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    /// Manifest file produced by a previous run's --manifest flag
    pub file: PathBuf,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run::dispatch(cli.command, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
