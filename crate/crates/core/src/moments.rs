//! Kurtosis estimate and the finite-sample centering/scale terms of the
//! standardized likelihood-ratio process.
//!
//! All centering and scale terms are pure functions of `(n, p, m, κ̂)`.
//! Every `log(1 - x)` is evaluated as `ln_1p(-x)`.

use crate::data::DataMatrix;
use crate::error::{Error, Result, Segment};

/// Plug-in estimate of the innovation kurtosis `E[x⁴]` together with the
/// three moment statistics it is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KurtosisEstimate {
    pub kappa_hat: f64,
    /// `tr(Σ̂²) - (tr Σ̂)² / n` for the centered full-sample covariance.
    pub tau_hat: f64,
    /// Sample variance of the squared distances `‖y_i - ȳ‖²`.
    pub nu_hat: f64,
    /// Sum over coordinates of the squared (biased) coordinate variances.
    pub omega_hat: f64,
}

impl KurtosisEstimate {
    /// Builds an estimate from its components, applying the floor at 1.
    pub fn from_parts(tau_hat: f64, nu_hat: f64, omega_hat: f64) -> Self {
        let kappa_hat = (3.0 + (nu_hat - 2.0 * tau_hat) / omega_hat).max(1.0);
        Self {
            kappa_hat,
            tau_hat,
            nu_hat,
            omega_hat,
        }
    }

    /// A fixed kurtosis, e.g. `3.0` for known Gaussian innovations.
    pub fn fixed(kappa: f64) -> Self {
        Self {
            kappa_hat: kappa,
            tau_hat: f64::NAN,
            nu_hat: f64::NAN,
            omega_hat: f64::NAN,
        }
    }
}

pub fn kurtosis_hat(data: &DataMatrix) -> Result<KurtosisEstimate> {
    let (n, p) = (data.n(), data.p());
    let nf = n as f64;
    let mean = data.mean();

    // Centered full-sample covariance (divisor n-1), lower triangle only.
    let mut cov = vec![0.0; p * p];
    let mut sq_norms = Vec::with_capacity(n);
    let mut centered = vec![0.0; p];
    for row in data.rows() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        for i in 0..p {
            let ci = centered[i];
            for j in 0..=i {
                cov[i * p + j] += ci * centered[j];
            }
        }
        sq_norms.push(centered.iter().map(|c| c * c).sum::<f64>());
    }

    let mut trace = 0.0;
    let mut frob_sq = 0.0;
    let mut omega_hat = 0.0;
    for i in 0..p {
        let d = cov[i * p + i];
        trace += d / (nf - 1.0);
        frob_sq += (d / (nf - 1.0)).powi(2);
        omega_hat += (d / nf).powi(2);
        for j in 0..i {
            frob_sq += 2.0 * (cov[i * p + j] / (nf - 1.0)).powi(2);
        }
    }
    if !(omega_hat > 0.0) {
        return Err(Error::DegenerateData(
            "every coordinate has zero sample variance".into(),
        ));
    }
    let tau_hat = frob_sq - trace * trace / nf;

    let mean_sq = sq_norms.iter().sum::<f64>() / nf;
    let nu_hat = sq_norms.iter().map(|d| (d - mean_sq).powi(2)).sum::<f64>() / (nf - 1.0);

    Ok(KurtosisEstimate::from_parts(tau_hat, nu_hat, omega_hat))
}

/// `ln(1 - p/denom)`, or an admissibility error when the argument is not positive.
fn log_one_minus(n: usize, p: usize, m: usize, segment: Segment, denom: f64) -> Result<f64> {
    let x = p as f64 / denom;
    if denom <= 0.0 || x >= 1.0 {
        return Err(Error::Inadmissible {
            n,
            p,
            m,
            segment,
            argument: 1.0 - x,
        });
    }
    Ok((-x).ln_1p())
}

fn check_split(n: usize, p: usize, m: usize, margin: usize) -> Result<()> {
    if m < p + margin {
        return Err(Error::Inadmissible {
            n,
            p,
            m,
            segment: Segment::Left,
            argument: 1.0 - p as f64 / (m as f64 + 1.0 - margin as f64),
        });
    }
    if m >= n || n - m < p + margin {
        return Err(Error::Inadmissible {
            n,
            p,
            m,
            segment: Segment::Right,
            argument: 1.0 - p as f64 / (n as f64 - m as f64 + 1.0 - margin as f64),
        });
    }
    Ok(())
}

/// Centering term of `2 log Λ^cen` at split `m`. Requires `m >= p+2` and
/// `n - m >= p+2`.
/// Orders the two segment terms by segment length so that `m` and `n - m`
/// produce bit-identical sums.
fn ordered(m: usize, n: usize, left: f64, right: f64) -> (f64, f64) {
    if 2 * m <= n {
        (left, right)
    } else {
        (right, left)
    }
}

pub fn mu_tilde(n: usize, p: usize, m: usize, kappa_hat: f64) -> Result<f64> {
    check_split(n, p, m, 2)?;
    let (nf, pf, mf) = (n as f64, p as f64, m as f64);
    let rf = nf - mf;
    let full = log_one_minus(n, p, m, Segment::Full, nf - 1.0)?;
    let left = log_one_minus(n, p, m, Segment::Left, mf - 1.0)?;
    let right = log_one_minus(n, p, m, Segment::Right, rf - 1.0)?;
    let (a, b) = ordered(m, n, mf * (mf - pf - 1.5) * left, rf * (rf - pf - 1.5) * right);
    Ok(nf * (nf - pf - 1.5) * full - a - b + (kappa_hat - 3.0) * pf / 2.0)
}

/// Centering term of the non-centered `2 log Λ` at split `m`. Requires
/// `m > p` and `n - m > p`.
pub fn mu_plain(n: usize, p: usize, m: usize, kappa_hat: f64) -> Result<f64> {
    check_split(n, p, m, 1)?;
    let (nf, pf, mf) = (n as f64, p as f64, m as f64);
    let rf = nf - mf;
    let full = log_one_minus(n, p, m, Segment::Full, nf)?;
    let left = log_one_minus(n, p, m, Segment::Left, mf)?;
    let right = log_one_minus(n, p, m, Segment::Right, rf)?;
    let (a, b) = ordered(m, n, mf * (mf - pf - 0.5) * left, rf * (rf - pf - 0.5) * right);
    Ok(nf * (nf - pf - 0.5) * full - a - b + (kappa_hat - 3.0) * pf / 2.0)
}

/// Squared scale `σ²_{n,t}` at split `m`.
pub fn sigma_nt_squared(n: usize, p: usize, m: usize) -> Result<f64> {
    check_split(n, p, m, 1)?;
    let (nf, mf) = (n as f64, m as f64);
    let rf = nf - mf;
    let full = log_one_minus(n, p, m, Segment::Full, nf)?;
    let left = log_one_minus(n, p, m, Segment::Left, mf)?;
    let right = log_one_minus(n, p, m, Segment::Right, rf)?;
    let wl = mf / nf;
    let wr = rf / nf;
    let (a, b) = ordered(m, n, wl * wl * left, wr * wr * right);
    let s2 = 2.0 * full - 2.0 * a - 2.0 * b;
    if !(s2 > 0.0) {
        return Err(Error::DegenerateData(format!(
            "scale term is not positive at n={n}, p={p}, m={m}: {s2:e}"
        )));
    }
    Ok(s2)
}

/// Scale `σ_{n,t}` at split `m`. Requires `m > p` and `n - m > p`.
pub fn sigma_nt(n: usize, p: usize, m: usize) -> Result<f64> {
    sigma_nt_squared(n, p, m).map(f64::sqrt)
}

/// Gap between the non-centered centering (carried over to the centered
/// statistic via the per-segment determinant corrections) and `μ̃`, both on
/// the `1/n` scale. Vanishes as `n` grows with `p/n` fixed.
///
/// The per-segment corrections `log(1 - p/len) + p/len` enter with the
/// weights `m/n`, `(n-m)/n` and `-1` that multiply the segment log-determinants.
pub fn substitution_discrepancy(n: usize, p: usize, m: usize, kappa_hat: f64) -> Result<f64> {
    let (nf, pf, mf) = (n as f64, p as f64, m as f64);
    let rf = nf - mf;
    let carried = mu_plain(n, p, m, kappa_hat)? / nf
        + mf / nf * (-pf / mf).ln_1p()
        + rf / nf * (-pf / rf).ln_1p()
        - (-pf / nf).ln_1p()
        + pf / nf;
    Ok((carried - mu_tilde(n, p, m, kappa_hat)? / nf).abs())
}
