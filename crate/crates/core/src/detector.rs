//! The standardized sequential likelihood-ratio process, its minimum, the
//! level-α decision, and the change-point location estimate.

use nalgebra::DMatrix;

use crate::covstream::{log_det_spd, sequential_log_dets_with, Centering};
use crate::data::{split_range, DataMatrix};
use crate::error::{Error, Result, Stage};
use crate::moments::{kurtosis_hat, mu_plain, mu_tilde, sigma_nt, KurtosisEstimate};
use crate::nullsim::{build_kernel_grid, simulate_min_quantile, QuantileEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEntry {
    pub m: usize,
    pub t: f64,
    /// `2 log Λ` at this split (centered or not, per the profile).
    pub two_log_lambda_cen: f64,
    /// Centering term; `μ̃` for the centered process, `μ` otherwise.
    pub mu_tilde: f64,
    pub sigma_nt: f64,
    /// `(2 log Λ - μ̃) / (n σ)`
    pub standardized: f64,
    /// `(2 log Λ - μ̃) / n`
    pub centered_over_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitProfile {
    pub n: usize,
    pub p: usize,
    pub t0: f64,
    pub centering: Centering,
    pub entries: Vec<ProfileEntry>,
}

/// Validates `t0` against the data shape and returns the split range.
pub fn admissible_range(n: usize, p: usize, t0: f64) -> Result<(usize, usize)> {
    if !(t0 > 0.0 && t0 < 0.5) {
        return Err(Error::Config(format!("t0={t0} must lie in (0, 0.5)")));
    }
    let (m_lo, m_hi) = split_range(n, t0);
    if m_lo < p + 2 || n - m_hi < p + 2 {
        let need = (p + 2) as f64 / n as f64;
        return Err(Error::Config(format!(
            "t0={t0} too small for n={n}, p={p}: need floor(n*t0) >= p+2, i.e. t0 >= {need:.4} (t0 > p/n = {:.4})",
            p as f64 / n as f64
        )));
    }
    Ok((m_lo, m_hi))
}

/// Centered sequential LRT profile over `m = ⌊n t0⌋ ..= ⌊n(1-t0)⌋`.
pub fn build_profile(data: &DataMatrix, t0: f64, kappa: &KurtosisEstimate) -> Result<SplitProfile> {
    profile_with(data, t0, kappa, Centering::Centered)
}

/// Same process from non-centered second-moment matrices, standardized with `μ_{n,t}`.
pub fn build_profile_noncentered(
    data: &DataMatrix,
    t0: f64,
    kappa: &KurtosisEstimate,
) -> Result<SplitProfile> {
    profile_with(data, t0, kappa, Centering::NonCentered)
}

fn profile_with(
    data: &DataMatrix,
    t0: f64,
    kappa: &KurtosisEstimate,
    centering: Centering,
) -> Result<SplitProfile> {
    let (n, p) = (data.n(), data.p());
    let (m_lo, m_hi) = admissible_range(n, p, t0)?;
    let dets = sequential_log_dets_with(data, m_lo, m_hi, centering)?;
    let nf = n as f64;
    let entries = dets
        .entries
        .iter()
        .map(|d| {
            let m = d.m;
            let mf = m as f64;
            let tll = mf * d.left + (nf - mf) * d.right - nf * dets.full;
            let mu = match centering {
                Centering::Centered => mu_tilde(n, p, m, kappa.kappa_hat)?,
                Centering::NonCentered => mu_plain(n, p, m, kappa.kappa_hat)?,
            };
            let sigma = sigma_nt(n, p, m)?;
            let centered_over_n = (tll - mu) / nf;
            Ok(ProfileEntry {
                m,
                t: mf / nf,
                two_log_lambda_cen: tll,
                mu_tilde: mu,
                sigma_nt: sigma,
                standardized: centered_over_n / sigma,
                centered_over_n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitProfile {
        n,
        p,
        t0,
        centering,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinStatistic {
    /// Minimum of the standardized process.
    pub statistic: f64,
    pub m_statistic: usize,
    /// Location of the minimum of `centered_over_n`.
    pub tau_hat: f64,
    pub m_tau: usize,
}

/// Minimum of the standardized process and the change-point estimate.
/// The two minimizations use different normalizations and may pick
/// different splits; ties go to the smallest `t`.
pub fn min_statistic(profile: &SplitProfile) -> Result<MinStatistic> {
    let first = profile
        .entries
        .first()
        .ok_or_else(|| Error::Config("profile is empty".into()))?;
    let mut best_stat = first;
    let mut best_tau = first;
    for e in &profile.entries[1..] {
        if e.standardized < best_stat.standardized {
            best_stat = e;
        }
        if e.centered_over_n < best_tau.centered_over_n {
            best_tau = e;
        }
    }
    Ok(MinStatistic {
        statistic: best_stat.standardized,
        m_statistic: best_stat.m,
        tau_hat: best_tau.t,
        m_tau: best_tau.m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub t0: f64,
    pub alpha: f64,
    pub mc_reps: usize,
    pub seed: u64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            t0: 0.2,
            alpha: 0.05,
            mc_reps: crate::nullsim::DEFAULT_REPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMeta {
    pub reps: usize,
    pub seed: u64,
    pub grid_size: usize,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub n: usize,
    pub p: usize,
    pub t0: f64,
    pub alpha: f64,
    /// `M_n^cen`
    pub statistic: f64,
    /// `q_α`
    pub quantile: f64,
    /// `statistic < quantile`
    pub reject: bool,
    pub tau_hat: f64,
    pub kappa: KurtosisEstimate,
    pub profile: SplitProfile,
    pub mc: McMeta,
}

/// Full pipeline: kurtosis, profile, minimum, simulated null quantile on the
/// data's split grid with `y = p/n`, and the decision.
pub fn detect(data: &DataMatrix, config: &DetectConfig) -> Result<DetectionReport> {
    let (n, p) = (data.n(), data.p());
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::Config(format!("alpha={} must lie in (0, 1)", config.alpha)));
    }
    if config.mc_reps < 1000 {
        return Err(Error::Config(format!(
            "mc_reps={} must be at least 1000",
            config.mc_reps
        )));
    }
    admissible_range(n, p, config.t0)?;
    let kg = build_kernel_grid(n, p, config.t0).map_err(|e| e.at(Stage::KernelGrid))?;
    let q = simulate_min_quantile(&kg, config.alpha, config.mc_reps, config.seed)
        .map_err(|e| e.at(Stage::Quantile))?;
    detect_with_quantile(data, config.t0, &q, kg.len())
}

/// Detection against a precomputed null quantile, e.g. one shared across
/// many simulated datasets of the same shape.
pub fn detect_with_quantile(
    data: &DataMatrix,
    t0: f64,
    quantile: &QuantileEstimate,
    grid_size: usize,
) -> Result<DetectionReport> {
    let kappa = kurtosis_hat(data).map_err(|e| e.at(Stage::Kurtosis))?;
    let profile = build_profile(data, t0, &kappa).map_err(|e| e.at(Stage::Profile))?;
    let min = min_statistic(&profile).map_err(|e| e.at(Stage::Profile))?;
    Ok(DetectionReport {
        n: data.n(),
        p: data.p(),
        t0,
        alpha: quantile.alpha,
        statistic: min.statistic,
        quantile: quantile.q_alpha,
        reject: min.statistic < quantile.q_alpha,
        tau_hat: min.tau_hat,
        kappa,
        profile,
        mc: McMeta {
            reps: quantile.reps,
            seed: quantile.seed,
            grid_size,
            std_error: quantile.std_error,
        },
    })
}

/// Log-determinant concavity gap between the pre- and post-change
/// covariances, weighted by the change location.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDiagnostic {
    pub e_n: f64,
    pub sigma1: DMatrix<f64>,
    pub sigman: DMatrix<f64>,
    pub t_star: f64,
    pub n: usize,
}

pub fn en_power(sigma1: &DMatrix<f64>, sigman: &DMatrix<f64>, t_star: f64, n: usize) -> Result<PowerDiagnostic> {
    if sigma1.shape() != sigman.shape() {
        return Err(Error::InvalidDimensions(format!(
            "covariances have shapes {:?} and {:?}",
            sigma1.shape(),
            sigman.shape()
        )));
    }
    if !(t_star > 0.0 && t_star < 1.0) || n == 0 {
        return Err(Error::Config(format!("t_star={t_star} must lie in (0, 1)")));
    }
    let w = split_range(n, t_star).0 as f64 / n as f64;
    let mix = sigma1 * w + sigman * (1.0 - w);
    let e = w * log_det_spd(sigma1)? + (1.0 - w) * log_det_spd(sigman)? - log_det_spd(&mix)?;
    Ok(PowerDiagnostic {
        // concavity makes this non-positive; clip rounding noise
        e_n: e.min(0.0),
        sigma1: sigma1.clone(),
        sigman: sigman.clone(),
        t_star,
        n,
    })
}
