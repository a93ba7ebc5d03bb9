//! Sequential sample covariances over every admissible split point.
//!
//! Segment covariances are assembled from running sums of outer products and
//! of observations, so each split costs O(p²) to assemble plus one O(p³)
//! Cholesky factorization.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{check_finite, DataMatrix};
use crate::error::{Error, Result, Segment};
use crate::linalg::{cholesky_in_place, log_det_from_factor};

/// Splits per parallel work unit. Fixed so that results do not depend on
/// the size of the thread pool.
const SPLIT_CHUNK: usize = 32;

/// Prefix sums `S_m = Σ_{k≤m} y_k y_kᵀ` and `s_m = Σ_{k≤m} y_k` for
/// `m = 0..=n` (with `S_0 = 0`, `s_0 = 0`).
#[derive(Debug, Clone)]
pub struct PrefixMoments {
    n: usize,
    p: usize,
    cum_outer: Vec<f64>,
    cum_sum: Vec<f64>,
}

impl PrefixMoments {
    /// Accumulates prefix sums over row-major `values` with `p` columns.
    /// Unlike [`DataMatrix`] this accepts any number of rows.
    pub fn from_rows(values: &[f64], p: usize) -> Result<Self> {
        if p == 0 || values.len() % p != 0 {
            return Err(Error::InvalidDimensions(format!(
                "{} values do not form rows of width {p}",
                values.len()
            )));
        }
        check_finite(values, p)?;
        let n = values.len() / p;
        let pp = p * p;
        let mut cum_outer = vec![0.0; (n + 1) * pp];
        let mut cum_sum = vec![0.0; (n + 1) * p];
        for (k, row) in values.chunks_exact(p).enumerate() {
            let (prev, next) = cum_outer.split_at_mut((k + 1) * pp);
            let prev = &prev[k * pp..];
            let next = &mut next[..pp];
            for i in 0..p {
                for j in 0..p {
                    next[i * p + j] = prev[i * p + j] + row[i] * row[j];
                }
            }
            let (prev, next) = cum_sum.split_at_mut((k + 1) * p);
            let prev = &prev[k * p..];
            for i in 0..p {
                next[i] = prev[i] + row[i];
            }
        }
        Ok(Self {
            n,
            p,
            cum_outer,
            cum_sum,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `S_m` as a row-major p×p slice, `0 <= m <= n`.
    pub fn outer(&self, m: usize) -> &[f64] {
        let pp = self.p * self.p;
        &self.cum_outer[m * pp..(m + 1) * pp]
    }

    /// `s_m`, `0 <= m <= n`.
    pub fn sum(&self, m: usize) -> &[f64] {
        &self.cum_sum[m * self.p..(m + 1) * self.p]
    }
}

pub fn build_prefix_moments(data: &DataMatrix) -> PrefixMoments {
    PrefixMoments::from_rows(data.as_slice(), data.p())
        .expect("DataMatrix invariants guarantee finite, well-shaped rows")
}

/// Centered sample covariance of observations `start..=end` (1-based) with
/// divisor `end - start`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCovariance {
    pub matrix: DMatrix<f64>,
    pub start: usize,
    pub end: usize,
    pub divisor: usize,
}

pub fn segment_covariance(moments: &PrefixMoments, i: usize, j: usize) -> Result<SegmentCovariance> {
    if i < 1 || i >= j || j > moments.n {
        return Err(Error::InvalidSegment {
            start: i,
            end: j,
            n: moments.n,
        });
    }
    let p = moments.p;
    let count = (j - i + 1) as f64;
    let divisor = j - i;
    let (outer_hi, outer_lo) = (moments.outer(j), moments.outer(i - 1));
    let (sum_hi, sum_lo) = (moments.sum(j), moments.sum(i - 1));
    let s: Vec<f64> = sum_hi.iter().zip(sum_lo).map(|(a, b)| a - b).collect();
    let mut m = DMatrix::zeros(p, p);
    for r in 0..p {
        for c in 0..p {
            let idx = r * p + c;
            m[(r, c)] = (outer_hi[idx] - outer_lo[idx] - s[r] * s[c] / count) / divisor as f64;
        }
    }
    let matrix = (&m + m.transpose()) * 0.5;
    Ok(SegmentCovariance {
        matrix,
        start: i,
        end: j,
        divisor,
    })
}

/// `log|A|` for a symmetric positive definite matrix, via Cholesky.
pub fn log_det_spd(matrix: &DMatrix<f64>) -> Result<f64> {
    let (r, c) = matrix.shape();
    if r != c {
        return Err(Error::InvalidDimensions(format!("matrix is {r}x{c}, not square")));
    }
    let mut buf = Vec::with_capacity(r * r);
    for i in 0..r {
        buf.extend(matrix.row(i).iter().copied());
    }
    cholesky_in_place(&mut buf, r).map_err(|pivot| Error::NotPositiveDefinite { pivot })?;
    Ok(log_det_from_factor(&buf, r))
}

/// How segment second-moment matrices are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// Segment mean removed, divisor `len - 1`.
    Centered,
    /// Raw second moments `Σ y yᵀ / len`.
    NonCentered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitLogDets {
    pub m: usize,
    /// `log|Σ̂_{1:m}|`
    pub left: f64,
    /// `log|Σ̂_{(m+1):n}|`
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialLogDets {
    pub n: usize,
    pub p: usize,
    /// `log|Σ̂_{1:n}|`
    pub full: f64,
    pub entries: Vec<SplitLogDets>,
}

/// Centered log-determinants of both segments for every split
/// `m_lo..=m_hi`, plus the full-sample log-determinant.
pub fn sequential_log_dets(data: &DataMatrix, m_lo: usize, m_hi: usize) -> Result<SequentialLogDets> {
    sequential_log_dets_with(data, m_lo, m_hi, Centering::Centered)
}

pub fn sequential_log_dets_with(
    data: &DataMatrix,
    m_lo: usize,
    m_hi: usize,
    centering: Centering,
) -> Result<SequentialLogDets> {
    let (n, p) = (data.n(), data.p());
    if m_lo <= m_hi && (m_lo < p + 2 || m_hi + p + 2 > n) {
        return Err(Error::Config(format!(
            "split range {m_lo}..={m_hi} needs p+2 <= m_lo and m_hi <= n-p-2 (n={n}, p={p})"
        )));
    }

    // Centered covariances are shift invariant; removing the global mean
    // first keeps the prefix sums well conditioned.
    let rows: Vec<f64> = match centering {
        Centering::Centered => {
            let mean = data.mean();
            data.rows()
                .flat_map(|r| r.iter().zip(&mean).map(|(v, m)| v - m))
                .collect()
        }
        Centering::NonCentered => data.as_slice().to_vec(),
    };

    let full = {
        let mut acc = Accumulator::new(p);
        rows.chunks_exact(p).for_each(|r| acc.add(r));
        let mut buf = vec![0.0; p * p];
        acc.assemble(&mut buf, centering);
        cholesky_in_place(&mut buf, p).map_err(|pivot| Error::SingularSplit {
            m: n,
            segment: Segment::Full,
            pivot,
        })?;
        log_det_from_factor(&buf, p)
    };

    if m_lo > m_hi {
        return Ok(SequentialLogDets {
            n,
            p,
            full,
            entries: Vec::new(),
        });
    }

    let forward = |k: usize| &rows[k * p..(k + 1) * p];
    let backward = |k: usize| &rows[(n - 1 - k) * p..(n - k) * p];

    let left = stream_log_dets(forward, p, m_lo, m_hi, centering)
        .map_err(|(count, pivot)| Error::SingularSplit {
            m: count,
            segment: Segment::Left,
            pivot,
        })?;
    let right = stream_log_dets(backward, p, n - m_hi, n - m_lo, centering)
        .map_err(|(count, pivot)| Error::SingularSplit {
            m: n - count,
            segment: Segment::Right,
            pivot,
        })?;

    let entries = (m_lo..=m_hi)
        .enumerate()
        .map(|(idx, m)| SplitLogDets {
            m,
            left: left[idx],
            // right was computed for counts n-m_hi..=n-m_lo, i.e. reversed in m
            right: right[m_hi - m],
        })
        .collect();
    Ok(SequentialLogDets { n, p, full, entries })
}

struct Accumulator {
    p: usize,
    count: usize,
    outer: Vec<f64>,
    sum: Vec<f64>,
}

impl Accumulator {
    fn new(p: usize) -> Self {
        Self {
            p,
            count: 0,
            outer: vec![0.0; p * p],
            sum: vec![0.0; p],
        }
    }

    fn add(&mut self, row: &[f64]) {
        let p = self.p;
        for i in 0..p {
            let ri = row[i];
            let out = &mut self.outer[i * p..i * p + i + 1];
            for (o, &rj) in out.iter_mut().zip(&row[..=i]) {
                *o += ri * rj;
            }
            self.sum[i] += ri;
        }
        self.count += 1;
    }

    /// Writes the lower triangle of the segment matrix into `buf`.
    fn assemble(&self, buf: &mut [f64], centering: Centering) {
        let p = self.p;
        let c = self.count as f64;
        match centering {
            Centering::Centered => {
                let inv_div = 1.0 / (c - 1.0);
                for i in 0..p {
                    let si = self.sum[i] / c;
                    for j in 0..=i {
                        buf[i * p + j] = (self.outer[i * p + j] - si * self.sum[j]) * inv_div;
                    }
                }
            }
            Centering::NonCentered => {
                let inv = 1.0 / c;
                for i in 0..p {
                    for j in 0..=i {
                        buf[i * p + j] = self.outer[i * p + j] * inv;
                    }
                }
            }
        }
    }
}

/// Log-determinants of the segments formed by the first `c` rows of `row`,
/// for `c = c_lo..=c_hi`. Errors carry `(c, pivot)`.
fn stream_log_dets<'a, F>(
    row: F,
    p: usize,
    c_lo: usize,
    c_hi: usize,
    centering: Centering,
) -> std::result::Result<Vec<f64>, (usize, usize)>
where
    F: Fn(usize) -> &'a [f64] + Sync,
{
    let starts: Vec<usize> = (c_lo..=c_hi).step_by(SPLIT_CHUNK).collect();
    let mut acc = Accumulator::new(p);
    let mut snapshots = Vec::with_capacity(starts.len());
    for &c0 in &starts {
        while acc.count < c0 {
            acc.add(row(acc.count));
        }
        snapshots.push(Accumulator {
            p,
            count: acc.count,
            outer: acc.outer.clone(),
            sum: acc.sum.clone(),
        });
    }

    let chunks: Vec<Vec<f64>> = snapshots
        .into_par_iter()
        .map(|mut acc| {
            let c0 = acc.count;
            let c1 = (c0 + SPLIT_CHUNK - 1).min(c_hi);
            let mut buf = vec![0.0; p * p];
            let mut out = Vec::with_capacity(c1 - c0 + 1);
            for c in c0..=c1 {
                if c > c0 {
                    acc.add(row(c - 1));
                }
                acc.assemble(&mut buf, centering);
                cholesky_in_place(&mut buf, p).map_err(|pivot| (c, pivot))?;
                out.push(log_det_from_factor(&buf, p));
            }
            Ok(out)
        })
        .collect::<std::result::Result<_, (usize, usize)>>()?;
    Ok(chunks.into_iter().flatten().collect())
}
