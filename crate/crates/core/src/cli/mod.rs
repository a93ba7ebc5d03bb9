//! `covcp` command-line surface.
//!
//! Every command writes one JSON document to stdout or `--output`. The exit
//! code reports operational success only; the test decision is in the JSON.

mod ingest;
mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::datagen::Innovation;
use crate::detector::DetectConfig;
use crate::error::{Error, Result};
use crate::nullsim::DEFAULT_REPS;

pub use ingest::{ensure_detectable, ingest_csv};
pub use report::{
    cmd_detect, cmd_quantile, cmd_simulate, innovation_name, write_per_run_csv, Aggregates, DetectJson,
    ExperimentSettings, ExperimentSummary, McInfo, ProfileRow, QuantileJson, RunRecord, SimulateConfig,
};

#[derive(Debug, Parser)]
#[command(name = "covcp", version, about = "Covariance change-point detection for high-dimensional data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a CSV data file for a covariance change point.
    Detect(DetectArgs),
    /// Simulate the null critical value for a given shape.
    Quantile(QuantileArgs),
    /// Run a synthetic experiment and summarize rejection rates and estimates.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    /// Trimming fraction; splits are searched in [t0, 1 - t0].
    #[arg(long, default_value_t = 0.2)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Monte Carlo paths for the null quantile.
    #[arg(long = "mc-reps", default_value_t = DEFAULT_REPS)]
    pub mc_reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl TestArgs {
    fn detect_config(&self) -> DetectConfig {
        DetectConfig {
            t0: self.t0,
            alpha: self.alpha,
            mc_reps: self.mc_reps,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub test: TestArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct QuantileArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[command(flatten)]
    pub test: TestArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InnovationArg {
    Gaussian,
    /// Standardized uniform, √12 (U - 1/2).
    Uniform,
    /// Unstandardized U(0, 1).
    UniformRaw,
}

impl From<InnovationArg> for Innovation {
    fn from(a: InnovationArg) -> Self {
        match a {
            InnovationArg::Gaussian => Innovation::Gaussian,
            InnovationArg::Uniform => Innovation::UniformStandardized,
            InnovationArg::UniformRaw => Innovation::UniformRaw,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// 1: diagonal jump; 2: jump rotated by a Haar orthogonal matrix.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub model: u8,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long = "t-star")]
    pub t_star: f64,
    #[arg(long)]
    pub runs: usize,
    #[arg(long, value_enum, default_value_t = InnovationArg::Gaussian)]
    pub innovation: InnovationArg,
    #[command(flatten)]
    pub test: TestArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the per-run records as CSV.
    #[arg(long = "per-run-csv")]
    pub per_run_csv: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn config(&self) -> SimulateConfig {
        SimulateConfig {
            model: self.model,
            n: self.n,
            p: self.p,
            delta: self.delta,
            t_star: self.t_star,
            runs: self.runs,
            innovation: self.innovation.into(),
            detect: self.test.detect_config(),
        }
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool when 0.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))?;
    Ok(pool.install(f))
}

fn write_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Csv(e.to_string()))?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    match output {
        Some(path) => {
            let mut f = File::create(path).map_err(io_err(path))?;
            writeln!(f, "{text}").map_err(io_err(path))?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect(args) => {
            let cfg = args.test.detect_config();
            let report = with_threads(args.test.threads, || cmd_detect(&args.input, &cfg))??;
            write_json(&report, args.output.as_deref())
        }
        Command::Quantile(args) => {
            let cfg = args.test.detect_config();
            let q = with_threads(args.test.threads, || cmd_quantile(args.n, args.p, &cfg))??;
            write_json(&q, args.output.as_deref())
        }
        Command::Simulate(args) => {
            let cfg = args.config();
            let summary = with_threads(args.test.threads, || cmd_simulate(&cfg))??;
            if let Some(path) = &args.per_run_csv {
                let f = File::create(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                write_per_run_csv(&summary.per_run, f)?;
            }
            write_json(&summary, args.output.as_deref())
        }
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
