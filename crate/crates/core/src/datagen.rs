//! Synthetic data for simulation experiments: a diagonal covariance jump
//! (optionally rotated by a Haar-distributed orthogonal matrix) at a known
//! change point.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Distribution of the i.i.d. innovation entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Innovation {
    #[default]
    Gaussian,
    /// `√12 (U - 1/2)` with `U ~ U(0, 1)`: mean 0, variance 1, kurtosis 9/5.
    UniformStandardized,
    /// Raw `U(0, 1)`, neither centered nor scaled.
    UniformRaw,
}

impl Innovation {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Innovation::Gaussian => StandardNormal.sample(rng),
            Innovation::UniformStandardized => 12f64.sqrt() * (rng.random::<f64>() - 0.5),
            Innovation::UniformRaw => rng.random::<f64>(),
        }
    }
}

/// Σ₁ = I before the change; after it, `diag(1, …, 1, δ, …, δ)` with
/// `⌊p/2⌋` trailing δ's, optionally conjugated by a Haar rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    pub n: usize,
    pub p: usize,
    pub t_star: f64,
    pub delta: f64,
    /// Rotate the post-change covariance by a fresh Haar matrix.
    pub rotation: bool,
    pub innovation: Innovation,
    pub seed: u64,
}

impl SyntheticModel {
    pub fn change_index(&self) -> usize {
        crate::data::split_range(self.n, self.t_star).0
    }

    /// Post-change eigenvalues.
    pub fn post_change_spectrum(&self) -> Vec<f64> {
        let k = self.p / 2;
        (0..self.p)
            .map(|i| if i < self.p - k { 1.0 } else { self.delta })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 || self.p < 1 {
            return Err(Error::Config(format!(
                "model needs n >= 3 and p >= 1, got n={}, p={}",
                self.n, self.p
            )));
        }
        if !(self.delta >= 1.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("delta={} must be >= 1", self.delta)));
        }
        let m = self.change_index();
        if !(self.t_star > 0.0 && self.t_star < 1.0) || m == 0 || m >= self.n {
            return Err(Error::Config(format!(
                "t_star={} must place the change strictly inside 1..{}",
                self.t_star, self.n
            )));
        }
        Ok(())
    }
}

/// Haar-distributed orthogonal matrix from `seed`.
pub fn haar_orthogonal(p: usize, seed: u64) -> DMatrix<f64> {
    haar_orthogonal_with(p, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// QR of a standard Gaussian matrix, with column `j` of Q multiplied by
/// `sign(R_jj)` so the result is exactly Haar distributed.
pub fn haar_orthogonal_with<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Derives an independent 64-bit seed for stream `index` (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn generate(model: &SyntheticModel) -> Result<DataMatrix> {
    model.validate()?;
    let (n, p) = (model.n, model.p);
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);

    let spectrum = model.post_change_spectrum();
    let sqrt_diag = DVector::from_iterator(p, spectrum.iter().map(|l| l.sqrt()));
    // With δ = 1 the post-change covariance is I and no rotation is drawn.
    let post_root = if model.rotation && model.delta != 1.0 {
        let u = haar_orthogonal_with(p, &mut rng);
        let scaled = DMatrix::from_fn(p, p, |i, j| u[(i, j)] * sqrt_diag[j]);
        Some(scaled * u.transpose())
    } else if spectrum.iter().any(|&l| l != 1.0) {
        Some(DMatrix::from_diagonal(&sqrt_diag))
    } else {
        None
    };

    let change = model.change_index();
    let mut values = Vec::with_capacity(n * p);
    let mut x = DVector::zeros(p);
    for i in 0..n {
        for v in x.iter_mut() {
            *v = model.innovation.sample(&mut rng);
        }
        match (&post_root, i >= change) {
            (Some(root), true) => values.extend((root * &x).iter()),
            _ => values.extend(x.iter()),
        }
    }
    DataMatrix::new(n, p, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize, p: usize, delta: f64) -> SyntheticModel {
        SyntheticModel {
            n,
            p,
            t_star: 0.5,
            delta,
            rotation: false,
            innovation: Innovation::Gaussian,
            seed: 42,
        }
    }

    #[test]
    fn haar_small_cases() {
        let u = haar_orthogonal(1, 9);
        assert!((u[(0, 0)].abs() - 1.0).abs() < 1e-15);
        for p in [2, 5, 17] {
            let u = haar_orthogonal(p, p as u64);
            let err = (u.transpose() * &u - DMatrix::identity(p, p)).amax();
            assert!(err <= 1e-10);
        }
    }

    #[test]
    fn haar_angle_is_uniform_on_o2() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 10_000;
        let mut u01: Vec<f64> = (0..draws)
            .map(|_| {
                let q = haar_orthogonal_with(2, &mut rng);
                let theta = q[(1, 0)].atan2(q[(0, 0)]);
                (theta + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)
            })
            .collect();
        u01.sort_by(f64::total_cmp);
        let nf = draws as f64;
        let ks = u01
            .iter()
            .enumerate()
            .map(|(i, &u)| ((i + 1) as f64 / nf - u).max(u - i as f64 / nf))
            .fold(0.0, f64::max);
        // Asymptotic 1% critical value 1.628/√N.
        assert!(ks < 1.628 / nf.sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn null_model_has_identity_covariance() {
        let (n, p) = (5000, 5);
        let data = generate(&model(n, p, 1.0)).unwrap();
        let m = data.to_matrix();
        let mean = m.row_mean();
        let mut c = m.clone();
        for mut r in c.row_iter_mut() {
            r -= &mean;
        }
        let cov = c.transpose() * c / (n as f64 - 1.0);
        let nf = n as f64;
        for i in 0..p {
            for j in 0..p {
                let (target, tol) = if i == j {
                    (1.0, 3.0 * (2.0 / nf).sqrt())
                } else {
                    (0.0, 3.0 * (1.0 / nf).sqrt())
                };
                assert!((cov[(i, j)] - target).abs() < tol, "({i},{j}) = {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn post_change_variance_scales() {
        let data = generate(&model(5000, 2, 4.0)).unwrap();
        let second: Vec<f64> = (2500..5000).map(|i| data.row(i)[1]).collect();
        let mean = second.iter().sum::<f64>() / 2500.0;
        let var = second.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2499.0;
        assert!((var - 4.0).abs() < 0.4, "var {var}");
        let first: Vec<f64> = (0..2500).map(|i| data.row(i)[1]).collect();
        let var1 = first.iter().map(|v| v * v).sum::<f64>() / 2500.0;
        assert!((var1 - 1.0).abs() < 0.1);
    }

    #[test]
    fn standardized_uniform_kurtosis() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let draws = 1_000_000;
        let xs: Vec<f64> = (0..draws)
            .map(|_| Innovation::UniformStandardized.sample(&mut rng))
            .collect();
        let nf = draws as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
        let kurt = m4 / (m2 * m2);
        assert!((1.7..=1.9).contains(&kurt), "kurtosis {kurt}");
        assert!(mean.abs() < 0.01 && (m2 - 1.0).abs() < 0.01);
    }

    #[test]
    fn generation_is_deterministic() {
        let mut m = model(200, 6, 2.0);
        m.rotation = true;
        m.innovation = Innovation::UniformStandardized;
        assert_eq!(generate(&m).unwrap(), generate(&m).unwrap());
        let mut other = m.clone();
        other.seed += 1;
        assert_ne!(generate(&m).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn rotation_is_ignored_under_the_null() {
        let mut a = model(100, 4, 1.0);
        let mut b = a.clone();
        a.rotation = false;
        b.rotation = true;
        assert_eq!(generate(&a).unwrap(), generate(&b).unwrap());
    }

    #[test]
    fn rotated_post_change_covariance_has_prescribed_spectrum() {
        let mut m = model(40_000, 4, 3.0);
        m.rotation = true;
        m.t_star = 0.01;
        let data = generate(&m).unwrap();
        let mat = data.to_matrix().rows(400, 39_600).into_owned();
        let cov = mat.transpose() * &mat / 39_600.0;
        let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (e, target) in eig.iter().zip([1.0, 1.0, 3.0, 3.0]) {
            assert!((e - target).abs() < 0.1 * target, "{eig:?}");
        }
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(generate(&model(100, 4, 0.5)).is_err());
        let mut m = model(100, 4, 2.0);
        m.t_star = 0.0;
        assert!(generate(&m).is_err());
        m.t_star = 1.0;
        assert!(generate(&m).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }
}
