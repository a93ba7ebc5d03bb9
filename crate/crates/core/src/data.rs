use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An n×p observation matrix, one observation per row.
///
/// Stored row-major so that a single observation is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n: usize,
    p: usize,
}

impl DataMatrix {
    /// Wraps row-major `values` of length `n * p`.
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimensions(format!(
                "need at least 3 observations, got n={n}"
            )));
        }
        if p < 1 {
            return Err(Error::InvalidDimensions("need at least one column".into()));
        }
        if values.len() != n * p {
            return Err(Error::InvalidDimensions(format!(
                "expected {} values for {n}x{p}, got {}",
                n * p,
                values.len()
            )));
        }
        check_finite(&values, p)?;
        Ok(Self { values, n, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: p,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), p, values)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = m.shape();
        let mut values = Vec::with_capacity(n * p);
        for i in 0..n {
            values.extend(m.row(i).iter().copied());
        }
        Self::new(n, p, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Dimension-to-sample-size ratio p/n.
    pub fn ratio(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// Observation `i` (0-based).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.p, &self.values)
    }

    /// Applies `y -> A y + b` to every observation.
    pub fn affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let q = a.nrows();
        if a.ncols() != self.p || b.len() != q {
            return Err(Error::InvalidDimensions(format!(
                "affine map is {}x{} with offset {}, data has p={}",
                a.nrows(),
                a.ncols(),
                b.len(),
                self.p
            )));
        }
        let mut values = Vec::with_capacity(self.n * q);
        for row in self.rows() {
            for r in 0..q {
                let mut acc = b[r];
                for (c, &v) in row.iter().enumerate() {
                    acc += a[(r, c)] * v;
                }
                values.push(acc);
            }
        }
        Self::new(self.n, q, values)
    }

    /// Column means.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.p];
        for row in self.rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        mean
    }
}

pub(crate) fn check_finite(values: &[f64], p: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(idx) => Err(Error::NonFinite {
            row: idx / p + 1,
            col: idx % p + 1,
        }),
        None => Ok(()),
    }
}

/// Integer split range `(⌊n·t0⌋, ⌊n·(1-t0)⌋)` covered by the trimmed
/// interval `[t0, 1-t0]`.
///
/// A relative tolerance of 1e-9 absorbs representation error, so that e.g.
/// `n = 100, t0 = 0.2` yields `(20, 80)` rather than `(20, 79)`.
pub fn split_range(n: usize, t0: f64) -> (usize, usize) {
    let floor = |x: f64| (x + 1e-9 * x.abs().max(1.0)).floor() as usize;
    let nf = n as f64;
    (floor(nf * t0), floor(nf * (1.0 - t0)))
}
