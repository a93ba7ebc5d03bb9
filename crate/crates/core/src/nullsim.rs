//! Monte Carlo quantiles of the standardized minimum of the limiting
//! Gaussian process on the split grid.
//!
//! Paths are drawn as `Z = L g` with `L` the Cholesky factor of the kernel
//! Gram matrix. Every replicate owns a ChaCha stream selected by its index,
//! so results are identical for any thread count.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::data::split_range;
use crate::error::{Error, Result};
use crate::linalg::cholesky_in_place;

/// Jitter levels tried, in order, when factorizing the kernel matrix.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Default number of simulated paths.
pub const DEFAULT_REPS: usize = 100_000;

/// Replicates per matrix product. Fixed for reproducibility.
const REP_BATCH: usize = 256;

/// Covariance `σ(t1, t2)` of the limiting process for dimension ratio `y`.
pub fn kernel_sigma(t1: f64, t2: f64, y: f64) -> Result<f64> {
    let (t1, t2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::KernelDomain(format!("ratio y={y} outside (0, 1)")));
    }
    if !(t1 > 0.0 && t2 < 1.0) {
        return Err(Error::KernelDomain(format!(
            "time points ({t1}, {t2}) outside (0, 1)"
        )));
    }
    if !(y < t1 && y < 1.0 - t2) {
        return Err(Error::KernelDomain(format!(
            "ratio y={y} must lie below min(t1, 1 - t2) for t1={t1}, t2={t2}"
        )));
    }
    let lead = y / t2;
    let cross = (t2 - t1) * y / ((1.0 - t1) * t2);
    let tail = y / (1.0 - t1);
    for (name, x) in [("1 - y/t2", lead), ("cross term", cross), ("1 - y/(1-t1)", tail)] {
        if x >= 1.0 {
            return Err(Error::KernelDomain(format!(
                "log argument {name} = {} is not positive at t1={t1}, t2={t2}, y={y}",
                1.0 - x
            )));
        }
    }
    Ok(2.0 * (-y).ln_1p()
        - 2.0 * t1 * t2 * (-lead).ln_1p()
        - 2.0 * (1.0 - t1) * t2 * (-cross).ln_1p()
        - 2.0 * (1.0 - t1) * (1.0 - t2) * (-tail).ln_1p())
}

/// Kernel Gram matrix on a grid of time points, with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub y: f64,
    pub grid: Vec<f64>,
    pub cov: DMatrix<f64>,
    /// Lower-triangular, `chol * cholᵀ = cov + jitter_used * I`.
    pub chol: DMatrix<f64>,
    pub jitter_used: f64,
}

impl KernelGrid {
    /// Builds the Gram matrix on arbitrary ascending points.
    pub fn from_points(grid: Vec<f64>, y: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Config("kernel grid is empty".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("kernel grid must be strictly ascending".into()));
        }
        let g = grid.len();
        let mut cov = DMatrix::zeros(g, g);
        for a in 0..g {
            for b in 0..=a {
                let v = kernel_sigma(grid[b], grid[a], y)?;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        if let Some(a) = (0..g).find(|&a| !(cov[(a, a)] > 0.0)) {
            return Err(Error::KernelDomain(format!(
                "variance at t={} is not positive",
                grid[a]
            )));
        }

        let mut buf = vec![0.0; g * g];
        for &jitter in &JITTER_LADDER {
            for a in 0..g {
                for b in 0..=a {
                    buf[a * g + b] = cov[(a, b)];
                }
                buf[a * g + a] += jitter;
            }
            if cholesky_in_place(&mut buf, g).is_ok() {
                let chol = DMatrix::from_fn(g, g, |a, b| if b <= a { buf[a * g + b] } else { 0.0 });
                return Ok(Self {
                    y,
                    grid,
                    cov,
                    chol,
                    jitter_used: jitter,
                });
            }
        }
        Err(Error::NumericalDegeneracy {
            jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Gram matrix on the data's split grid `{m/n : ⌊n t0⌋ <= m <= ⌊n(1-t0)⌋}`
/// with `y = p/n`.
pub fn build_kernel_grid(n: usize, p: usize, t0: f64) -> Result<KernelGrid> {
    if !(t0 > 0.0 && t0 <= 0.5) {
        return Err(Error::Config(format!("t0={t0} must lie in (0, 0.5]")));
    }
    let (m_lo, m_hi) = split_range(n, t0);
    if m_lo <= p || n - m_hi <= p {
        return Err(Error::Config(format!(
            "trimming t0={t0} too small for n={n}, p={p}: need floor(n*t0)={m_lo} > p (t0 > p/n)"
        )));
    }
    let nf = n as f64;
    let grid = (m_lo..=m_hi).map(|m| m as f64 / nf).collect();
    KernelGrid::from_points(grid, p as f64 / nf)
}

/// Simulated values of `min_a Z(t_a)/√σ(t_a, t_a)`, sorted ascending.
#[derive(Debug, Clone)]
pub struct NullSample {
    pub minima: Vec<f64>,
    pub seed: u64,
}

/// Empirical lower quantile of the simulated null minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileEstimate {
    pub q_alpha: f64,
    pub alpha: f64,
    pub reps: usize,
    /// Order-statistic standard error `√(α(1-α)/reps) / f̂(q)`.
    pub std_error: f64,
    pub seed: u64,
}

impl NullSample {
    pub fn reps(&self) -> usize {
        self.minima.len()
    }

    /// Order statistic at 1-based index `⌈α·reps⌉`.
    pub fn quantile(&self, alpha: f64) -> Result<QuantileEstimate> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha={alpha} must lie in (0, 1)")));
        }
        let reps = self.minima.len();
        if reps == 0 {
            return Err(Error::Config("null sample is empty".into()));
        }
        let k = ((alpha * reps as f64).ceil() as usize).clamp(1, reps);
        let q_alpha = self.minima[k - 1];

        // Density at q from the spacing of order statistics ±h around k.
        let h = ((reps as f64).sqrt().round() as usize).max(1);
        let lo = k.saturating_sub(h).max(1);
        let hi = (k + h).min(reps);
        let spread = self.minima[hi - 1] - self.minima[lo - 1];
        let std_error = if spread > 0.0 {
            let density = (hi - lo) as f64 / reps as f64 / spread;
            (alpha * (1.0 - alpha) / reps as f64).sqrt() / density
        } else {
            0.0
        };
        Ok(QuantileEstimate {
            q_alpha,
            alpha,
            reps,
            std_error,
            seed: self.seed,
        })
    }
}

fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Draws `reps` paths and returns their sorted standardized minima.
pub fn simulate_minima(kg: &KernelGrid, reps: usize, seed: u64) -> NullSample {
    let g = kg.len();
    let inv_sd: Vec<f64> = (0..g).map(|a| 1.0 / kg.cov[(a, a)].sqrt()).collect();
    let batches: Vec<usize> = (0..reps).step_by(REP_BATCH).collect();
    let mut minima: Vec<f64> = batches
        .into_par_iter()
        .flat_map_iter(|start| {
            let cols = REP_BATCH.min(reps - start);
            let mut normals = DMatrix::<f64>::zeros(g, cols);
            for c in 0..cols {
                let mut rng = rep_rng(seed, start + c);
                for v in normals.column_mut(c).iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
            }
            let paths = &kg.chol * normals;
            let inv_sd = &inv_sd;
            (0..cols)
                .map(move |c| {
                    paths
                        .column(c)
                        .iter()
                        .zip(inv_sd)
                        .map(|(z, s)| z * s)
                        .fold(f64::INFINITY, f64::min)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    minima.sort_by(f64::total_cmp);
    NullSample { minima, seed }
}

/// α-quantile of the standardized null minimum from `reps` simulated paths.
pub fn simulate_min_quantile(
    kg: &KernelGrid,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<QuantileEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha={alpha} must lie in (0, 1)")));
    }
    if reps < 1000 {
        return Err(Error::Config(format!("mc_reps={reps} must be at least 1000")));
    }
    simulate_minima(kg, reps, seed).quantile(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::sigma_nt_squared;

    // 50-digit evaluations of the kernel.
    const K_HALF_HALF_QUARTER: f64 = 0.11778303565638346;
    const K_04_06_02: f64 = 0.027763186828014392;

    #[test]
    fn kernel_reference_values() {
        let a = kernel_sigma(0.5, 0.5, 0.25).unwrap();
        assert!((a - K_HALF_HALF_QUARTER).abs() < 1e-14);
        assert!((a - 0.117783).abs() < 1e-6);
        let b = kernel_sigma(0.4, 0.6, 0.2).unwrap();
        assert!((b - K_04_06_02).abs() < 1e-14);
    }

    #[test]
    fn kernel_diagonal_drops_cross_term() {
        let (t, y) = (0.35f64, 0.1f64);
        let direct = 2.0 * (1.0 - y).ln()
            - 2.0 * t * t * (1.0 - y / t).ln()
            - 2.0 * (1.0 - t).powi(2) * (1.0 - y / (1.0 - t)).ln();
        assert!((kernel_sigma(t, t, y).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn kernel_symmetric_and_domain_checked() {
        assert_eq!(
            kernel_sigma(0.3, 0.7, 0.1).unwrap().to_bits(),
            kernel_sigma(0.7, 0.3, 0.1).unwrap().to_bits()
        );
        assert!(matches!(kernel_sigma(0.2, 0.5, 0.25), Err(Error::KernelDomain(_))));
        assert!(matches!(kernel_sigma(0.3, 0.8, 0.25), Err(Error::KernelDomain(_))));
        assert!(kernel_sigma(0.3, 0.5, 0.0).is_err());
    }

    #[test]
    fn grid_diagonal_matches_scale_term() {
        let kg = build_kernel_grid(100, 10, 0.2).unwrap();
        // m = 20..=80
        assert_eq!(kg.len(), 61);
        assert_eq!(kg.grid[0], 0.2);
        for (a, m) in (20..=80).enumerate() {
            let s2 = sigma_nt_squared(100, 10, m).unwrap();
            assert!((kg.cov[(a, a)] - s2).abs() <= 1e-12 * s2);
        }
    }

    #[test]
    fn grid_factor_reproduces_gram_matrix() {
        let kg = build_kernel_grid(200, 20, 0.25).unwrap();
        let g = kg.len();
        let target = &kg.cov + DMatrix::identity(g, g) * kg.jitter_used;
        let rel = (&kg.chol * kg.chol.transpose() - &target).norm() / target.norm();
        assert!(rel < 1e-8, "rel {rel}");
    }

    #[test]
    fn grid_rejects_small_trimming() {
        assert!(matches!(build_kernel_grid(100, 20, 0.2), Err(Error::Config(_))));
        assert!(build_kernel_grid(100, 10, 0.0).is_err());
    }

    #[test]
    fn single_point_grid_is_standard_normal() {
        let kg = KernelGrid::from_points(vec![0.5], 0.1).unwrap();
        let sample = simulate_minima(&kg, 20_000, 3);
        let mean = sample.minima.iter().sum::<f64>() / 20_000.0;
        let var = sample.minima.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 19_999.0;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.04);
    }

    #[test]
    fn quantiles_are_reproducible_and_monotone() {
        let kg = build_kernel_grid(120, 10, 0.2).unwrap();
        let a = simulate_min_quantile(&kg, 0.05, 2000, 11).unwrap();
        let b = simulate_min_quantile(&kg, 0.05, 2000, 11).unwrap();
        assert_eq!(a.q_alpha.to_bits(), b.q_alpha.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let sample = simulate_minima(&kg, 2000, 11);
        let qs: Vec<f64> = [0.01, 0.05, 0.1, 0.5, 0.9]
            .iter()
            .map(|&al| sample.quantile(al).unwrap().q_alpha)
            .collect();
        assert!(qs.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.std_error > 0.0);
    }

    #[test]
    fn thread_count_does_not_change_minima() {
        let kg = build_kernel_grid(120, 10, 0.2).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_minima(&kg, 1500, 5));
        let b = four.install(|| simulate_minima(&kg, 1500, 5));
        assert_eq!(a.minima, b.minima);
    }

    #[test]
    fn quantile_argument_checks() {
        let kg = KernelGrid::from_points(vec![0.5], 0.1).unwrap();
        assert!(simulate_min_quantile(&kg, 0.0, 5000, 0).is_err());
        assert!(simulate_min_quantile(&kg, 1.0, 5000, 0).is_err());
        assert!(simulate_min_quantile(&kg, 0.05, 999, 0).is_err());
    }

    #[test]
    fn correlation_is_strictly_inside_cauchy_schwarz() {
        let ts = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        for &y in &[0.05, 0.1, 0.2] {
            for (i, &t1) in ts.iter().enumerate() {
                for &t2 in &ts[i + 1..] {
                    if y >= t1 || y >= 1.0 - t2 {
                        continue;
                    }
                    let c = kernel_sigma(t1, t2, y).unwrap();
                    let bound =
                        (kernel_sigma(t1, t1, y).unwrap() * kernel_sigma(t2, t2, y).unwrap()).sqrt();
                    assert!(c > 0.0 && c < bound, "t1={t1} t2={t2} y={y}");
                }
            }
        }
    }
}
