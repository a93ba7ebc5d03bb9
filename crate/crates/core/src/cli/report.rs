//! JSON report types and the command implementations behind them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::ingest::{ensure_detectable, ingest_csv};
use crate::datagen::{derive_seed, generate, Innovation, SyntheticModel};
use crate::detector::{admissible_range, detect, detect_with_quantile, DetectConfig, DetectionReport, ProfileEntry};
use crate::error::{Result, Stage};
use crate::nullsim::{build_kernel_grid, simulate_min_quantile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub m: usize,
    pub t: f64,
    pub two_log_lambda_cen: f64,
    pub mu_tilde: f64,
    pub sigma_nt: f64,
    pub standardized: f64,
    pub centered_over_n: f64,
}

impl From<&ProfileEntry> for ProfileRow {
    fn from(e: &ProfileEntry) -> Self {
        Self {
            m: e.m,
            t: e.t,
            two_log_lambda_cen: e.two_log_lambda_cen,
            mu_tilde: e.mu_tilde,
            sigma_nt: e.sigma_nt,
            standardized: e.standardized,
            centered_over_n: e.centered_over_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McInfo {
    pub reps: usize,
    pub seed: u64,
    pub std_error: f64,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectJson {
    pub n: usize,
    pub p: usize,
    pub t0: f64,
    pub alpha: f64,
    pub kappa_hat: f64,
    pub statistic: f64,
    pub quantile: f64,
    pub reject: bool,
    pub tau_hat: f64,
    pub mc: McInfo,
    pub profile: Vec<ProfileRow>,
}

impl From<&DetectionReport> for DetectJson {
    fn from(r: &DetectionReport) -> Self {
        Self {
            n: r.n,
            p: r.p,
            t0: r.t0,
            alpha: r.alpha,
            kappa_hat: r.kappa.kappa_hat,
            statistic: r.statistic,
            quantile: r.quantile,
            reject: r.reject,
            tau_hat: r.tau_hat,
            mc: McInfo {
                reps: r.mc.reps,
                seed: r.mc.seed,
                std_error: r.mc.std_error,
                grid_size: r.mc.grid_size,
            },
            profile: r.profile.entries.iter().map(ProfileRow::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileJson {
    pub q_alpha: f64,
    pub alpha: f64,
    pub y: f64,
    pub grid_size: usize,
    pub reps: usize,
    pub seed: u64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    #[serde(rename = "M")]
    pub statistic: f64,
    #[serde(rename = "q")]
    pub quantile: f64,
    pub reject: bool,
    pub tau_hat: f64,
}

/// Settings of a simulation experiment, echoed into its summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub model: u8,
    pub n: usize,
    pub p: usize,
    pub delta: f64,
    pub t_star: f64,
    pub innovation: String,
    pub t0: f64,
    pub alpha: f64,
    pub mc_reps: usize,
    pub seed: u64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub settings: ExperimentSettings,
    pub quantile: f64,
    pub quantile_std_error: f64,
    pub rejection_rate: f64,
    pub tau_mean: f64,
    /// Sample standard deviation (divisor `runs - 1`; 0 for a single run).
    pub tau_sd: f64,
    /// Mean of `(tau_hat - t_star)²`.
    pub tau_mse: f64,
    pub per_run: Vec<RunRecord>,
}

/// Aggregates of a set of runs; recomputing from `per_run` is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    pub rejection_rate: f64,
    pub tau_mean: f64,
    pub tau_sd: f64,
    pub tau_mse: f64,
}

impl Aggregates {
    pub fn from_runs(runs: &[RunRecord], t_star: f64) -> Self {
        let k = runs.len() as f64;
        let rejects = runs.iter().filter(|r| r.reject).count() as f64;
        let tau_mean = runs.iter().map(|r| r.tau_hat).sum::<f64>() / k;
        let ss = runs.iter().map(|r| (r.tau_hat - tau_mean).powi(2)).sum::<f64>();
        let tau_sd = if runs.len() > 1 { (ss / (k - 1.0)).sqrt() } else { 0.0 };
        let tau_mse = runs.iter().map(|r| (r.tau_hat - t_star).powi(2)).sum::<f64>() / k;
        Self {
            rejection_rate: rejects / k,
            tau_mean,
            tau_sd,
            tau_mse,
        }
    }
}

impl ExperimentSummary {
    pub fn aggregates(&self) -> Aggregates {
        Aggregates {
            rejection_rate: self.rejection_rate,
            tau_mean: self.tau_mean,
            tau_sd: self.tau_sd,
            tau_mse: self.tau_mse,
        }
    }
}

pub fn cmd_detect(input: &std::path::Path, config: &DetectConfig) -> Result<DetectJson> {
    let data = ingest_csv(input)?;
    ensure_detectable(&data)?;
    let report = detect(&data, config)?;
    Ok(DetectJson::from(&report))
}

pub fn cmd_quantile(n: usize, p: usize, config: &DetectConfig) -> Result<QuantileJson> {
    let kg = build_kernel_grid(n, p, config.t0)?;
    let q = simulate_min_quantile(&kg, config.alpha, config.mc_reps, config.seed)?;
    Ok(QuantileJson {
        q_alpha: q.q_alpha,
        alpha: q.alpha,
        y: kg.y,
        grid_size: kg.len(),
        reps: q.reps,
        seed: q.seed,
        std_error: q.std_error,
    })
}

/// Parameters of a simulation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    /// 1 = diagonal jump, 2 = Haar-rotated jump.
    pub model: u8,
    pub n: usize,
    pub p: usize,
    pub delta: f64,
    pub t_star: f64,
    pub runs: usize,
    pub innovation: Innovation,
    pub detect: DetectConfig,
}

pub fn innovation_name(innovation: Innovation) -> &'static str {
    match innovation {
        Innovation::Gaussian => "gaussian",
        Innovation::UniformStandardized => "uniform",
        Innovation::UniformRaw => "uniform-raw",
    }
}

/// Runs `runs` independent datasets against one shared null quantile.
/// Run `i` uses seed `derive_seed(master, i)`; the quantile uses the master seed.
pub fn cmd_simulate(config: &SimulateConfig) -> Result<ExperimentSummary> {
    let SimulateConfig { n, p, runs, .. } = *config;
    let det = &config.detect;
    if runs == 0 {
        return Err(crate::error::Error::Config("runs must be at least 1".into()));
    }
    if config.model != 1 && config.model != 2 {
        return Err(crate::error::Error::Config(format!(
            "model must be 1 or 2, got {}",
            config.model
        )));
    }
    admissible_range(n, p, det.t0)?;
    let kg = build_kernel_grid(n, p, det.t0).map_err(|e| e.at(Stage::KernelGrid))?;
    let q = simulate_min_quantile(&kg, det.alpha, det.mc_reps, det.seed)
        .map_err(|e| e.at(Stage::Quantile))?;

    let per_run = (0..runs)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(det.seed, i as u64);
            let data = generate(&SyntheticModel {
                n,
                p,
                t_star: config.t_star,
                delta: config.delta,
                rotation: config.model == 2,
                innovation: config.innovation,
                seed,
            })?;
            let report = detect_with_quantile(&data, det.t0, &q, kg.len())?;
            Ok(RunRecord {
                seed,
                statistic: report.statistic,
                quantile: report.quantile,
                reject: report.reject,
                tau_hat: report.tau_hat,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let agg = Aggregates::from_runs(&per_run, config.t_star);
    Ok(ExperimentSummary {
        settings: ExperimentSettings {
            model: config.model,
            n,
            p,
            delta: config.delta,
            t_star: config.t_star,
            innovation: innovation_name(config.innovation).to_string(),
            t0: det.t0,
            alpha: det.alpha,
            mc_reps: det.mc_reps,
            seed: det.seed,
            runs,
        },
        quantile: q.q_alpha,
        quantile_std_error: q.std_error,
        rejection_rate: agg.rejection_rate,
        tau_mean: agg.tau_mean,
        tau_sd: agg.tau_sd,
        tau_mse: agg.tau_mse,
        per_run,
    })
}

/// Writes `per_run` as CSV with header `seed,M,q,reject,tau_hat`.
pub fn write_per_run_csv<W: std::io::Write>(runs: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in runs {
        w.serialize(r).map_err(|e| crate::error::Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| crate::error::Error::Csv(e.to_string()))?;
    Ok(())
}
