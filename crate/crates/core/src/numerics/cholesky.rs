use crate::error::{Error, Result};

use super::dense::dot;
use super::DenseMatrix;

/// Relative tolerance used by the symmetry precondition.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Lower-triangular factor `L` with `L·Lᵀ = A + applied_jitter·I`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    lower: DenseMatrix,
    applied_jitter: f64,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    pub fn applied_jitter(&self) -> f64 {
        self.applied_jitter
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// Solves `L·X = B`.
    pub fn solve_lower(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(b.rows())?;
        let n = self.dim();
        let k = b.cols();
        let l = &self.lower;
        let mut x = b.clone();
        for i in 0..n {
            let (done, rest) = x.as_mut_rows_split(i);
            let row = &mut rest[..k];
            for (j, &lij) in l.row(i)[..i].iter().enumerate() {
                if lij == 0.0 {
                    continue;
                }
                let xj = &done[j * k..(j + 1) * k];
                for (r, &v) in row.iter_mut().zip(xj) {
                    *r -= lij * v;
                }
            }
            let d = l[(i, i)];
            for r in row.iter_mut() {
                *r /= d;
            }
        }
        Ok(x)
    }

    /// Solves `Lᵀ·X = B`.
    pub fn solve_upper(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(b.rows())?;
        let n = self.dim();
        let k = b.cols();
        let l = &self.lower;
        let mut x = b.clone();
        for i in (0..n).rev() {
            let d = l[(i, i)];
            {
                let row = x.row_mut(i);
                for r in row.iter_mut() {
                    *r /= d;
                }
            }
            // eliminate x_i from the rows above: row_j -= L[i][j] * x_i
            let xi = x.row(i).to_vec();
            for (j, &lij) in l.row(i)[..i].iter().enumerate() {
                if lij == 0.0 {
                    continue;
                }
                for (r, &v) in x.row_mut(j).iter_mut().zip(&xi) {
                    *r -= lij * v;
                }
            }
            debug_assert_eq!(xi.len(), k);
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(solve_psd(self, &DenseMatrix::column(b))?.into_vec())
    }

    /// `(A + jitter·I)⁻¹`, assembled from triangular solves.
    pub fn inverse(&self) -> DenseMatrix {
        solve_psd(self, &DenseMatrix::identity(self.dim())).expect("square identity")
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "factor of size {} vs right-hand side with {rows} rows",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl DenseMatrix {
    /// Splits the storage into the rows before `i` and the rows from `i` on.
    fn as_mut_rows_split(&mut self, i: usize) -> (&[f64], &mut [f64]) {
        let cols = self.cols();
        let (a, b) = self.as_mut_slice().split_at_mut(i * cols);
        (a, b)
    }
}

/// Plain Cholesky of `A + shift·I`; `None` on a non-positive pivot.
fn try_factor(a: &DenseMatrix, shift: f64) -> Option<DenseMatrix> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                let pivot = a[(i, i)] + shift - s;
                if !(pivot.is_finite() && pivot > 0.0) {
                    return None;
                }
                l[(i, i)] = pivot.sqrt();
            } else {
                l[(i, j)] = (a[(i, j)] - s) / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Factors `A + j·I` for the smallest `j` on the ladder `0, initial, 10·initial, …` not above `max_jitter`.
pub fn cholesky_with_jitter(
    a: &DenseMatrix,
    initial_jitter: f64,
    max_jitter: f64,
) -> Result<CholeskyFactor> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cholesky of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let asym = a.relative_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if let Some(lower) = try_factor(a, 0.0) {
        return Ok(CholeskyFactor {
            lower,
            applied_jitter: 0.0,
        });
    }
    if initial_jitter > 0.0 {
        let mut jitter = initial_jitter;
        while jitter <= max_jitter * (1.0 + 1e-12) {
            if let Some(lower) = try_factor(a, jitter) {
                return Ok(CholeskyFactor {
                    lower,
                    applied_jitter: jitter,
                });
            }
            jitter *= 10.0;
        }
    }
    Err(Error::NotPositiveDefinite {
        max_jitter: max_jitter.max(0.0),
    })
}

/// Jitter ladder scaled by the mean diagonal: starts at `1e-10·mean`, capped at `1e-2·mean`.
pub fn default_jitter_range(a: &DenseMatrix) -> (f64, f64) {
    let n = a.rows().max(1);
    let mean = a.diag().iter().sum::<f64>() / n as f64;
    let scale = if mean > 0.0 && mean.is_finite() { mean } else { 1.0 };
    (1e-10 * scale, 1e-2 * scale)
}

/// [`cholesky_with_jitter`] with the scale-aware default ladder.
pub fn cholesky(a: &DenseMatrix) -> Result<CholeskyFactor> {
    let (initial, max) = default_jitter_range(a);
    cholesky_with_jitter(a, initial, max)
}

/// Solves `(A + jitter·I)·X = B` by a forward then a backward substitution.
pub fn solve_psd(factor: &CholeskyFactor, b: &DenseMatrix) -> Result<DenseMatrix> {
    let y = factor.solve_lower(b)?;
    factor.solve_upper(&y)
}

/// `log|A + jitter·I| = 2·Σ log L_ii`.
pub fn logdet_from_factor(factor: &CholeskyFactor) -> f64 {
    2.0 * factor.lower.diag().iter().map(|d| d.ln()).sum::<f64>()
}
