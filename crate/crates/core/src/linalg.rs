//! Dense lower-triangular Cholesky on packed row-major buffers.
//!
//! The detector refactorizes one p×p matrix per split, so this avoids
//! allocating a fresh `DMatrix` each time.

/// In-place Cholesky of the symmetric `dim`×`dim` matrix in `a` (row-major,
/// only the lower triangle is read). On success the lower triangle holds L
/// with `A = L Lᵀ`; the strict upper triangle is left untouched.
///
/// Returns the 0-based index of the first non-positive pivot on failure.
pub(crate) fn cholesky_in_place(a: &mut [f64], dim: usize) -> Result<(), usize> {
    debug_assert_eq!(a.len(), dim * dim);
    for j in 0..dim {
        let (above, rest) = a.split_at_mut((j + 1) * dim);
        let row_j = &mut above[j * dim..];
        let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(d > 0.0 && d.is_finite()) {
            return Err(j);
        }
        let d = d.sqrt();
        row_j[j] = d;
        let inv = 1.0 / d;
        let row_j = &*row_j;
        for row_i in rest.chunks_exact_mut(dim) {
            row_i[j] = (row_i[j] - dot(&row_i[..j], &row_j[..j])) * inv;
        }
    }
    Ok(())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log|A|` from a factor produced by [`cholesky_in_place`].
pub(crate) fn log_det_from_factor(l: &[f64], dim: usize) -> f64 {
    2.0 * (0..dim).map(|i| l[i * dim + i].ln()).sum::<f64>()
}
