//! Hat (piecewise-linear tent) basis on an equally spaced knot grid.
//!
//! In `d` dimensions the basis is the tensor product of the per-dimension
//! hats. Grid nodes, and therefore the columns of the design matrix and the
//! rows of the knot covariance, are enumerated lexicographically with the
//! first dimension varying fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, kernel_matrix_with_grads, Hyperparams};
use crate::numerics::{sparse_dense_product, DenseMatrix, SparseRowMatrix};

/// Equally spaced knots along one input dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnotAxis {
    pub lb: f64,
    pub ub: f64,
    pub m: usize,
}

impl KnotAxis {
    pub fn spacing(&self) -> f64 {
        (self.ub - self.lb) / (self.m - 1) as f64
    }

    /// `t_j = lb + j·Δ`, with the last knot pinned to `ub`.
    pub fn knots(&self) -> Vec<f64> {
        let delta = self.spacing();
        let mut t: Vec<f64> = (0..self.m).map(|j| self.lb + j as f64 * delta).collect();
        t[self.m - 1] = self.ub;
        t
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lb && x <= self.ub
    }

    /// The (at most two) hats that are non-zero at `x`, by ascending knot index.
    fn active(&self, x: f64, knots: &[f64]) -> ([(usize, f64); 2], usize) {
        let delta = self.spacing();
        let last_cell = self.m - 2;
        let u = ((x - self.lb) / delta).floor();
        let mut c = if u <= 0.0 { 0 } else { (u as usize).min(last_cell) };
        while c > 0 && x < knots[c] {
            c -= 1;
        }
        while c < last_cell && x > knots[c + 1] {
            c += 1;
        }
        if x == knots[c] {
            ([(c, 1.0), (0, 0.0)], 1)
        } else if x == knots[c + 1] {
            ([(c + 1, 1.0), (0, 0.0)], 1)
        } else {
            (
                [
                    (c, hat_eval(x, knots[c], delta)),
                    (c + 1, hat_eval(x, knots[c + 1], delta)),
                ],
                2,
            )
        }
    }
}

/// Tensor-product knot grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnotGrid {
    axes: Vec<KnotAxis>,
}

impl KnotGrid {
    pub fn axes(&self) -> &[KnotAxis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Total number of basis functions, `∏ m_k`.
    pub fn n_basis(&self) -> usize {
        self.axes.iter().map(|a| a.m).product()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|a| (a.lb, a.ub)).collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim() && self.axes.iter().zip(point).all(|(a, &x)| a.contains(x))
    }

    /// Coordinates of node `index` in the first-dimension-fastest enumeration.
    pub fn node(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        self.axes
            .iter()
            .map(|a| {
                let j = rest % a.m;
                rest /= a.m;
                a.knots()[j]
            })
            .collect()
    }

    /// All `M` nodes as an `M×d` matrix.
    pub fn nodes(&self) -> DenseMatrix {
        let knots: Vec<Vec<f64>> = self.axes.iter().map(KnotAxis::knots).collect();
        let total = self.n_basis();
        let d = self.dim();
        DenseMatrix::from_fn(total, d, |c, k| {
            let stride: usize = self.axes[..k].iter().map(|a| a.m).product();
            knots[k][(c / stride) % self.axes[k].m]
        })
    }
}

/// Per-dimension `(lb, ub)` covering the data.
///
/// With `round_to_integer` the bounds are `floor(min)` and `ceil(max)`;
/// a zero-width range is widened by 0.5 on each side.
pub fn domain_from_data(x: &DenseMatrix, round_to_integer: bool) -> Result<Vec<(f64, f64)>> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::EmptyData);
    }
    (0..x.cols())
        .map(|k| {
            let col = x.col(k);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !min.is_finite() || !max.is_finite() {
                return Err(Error::NonFinite("input data"));
            }
            let (mut lb, mut ub) = if round_to_integer {
                (min.floor(), max.ceil())
            } else {
                (min, max)
            };
            if lb == ub {
                lb -= 0.5;
                ub += 0.5;
            }
            Ok((lb, ub))
        })
        .collect()
}

/// Grid with `m[k]` equally spaced knots on `bounds[k]`.
pub fn make_knot_grid(bounds: &[(f64, f64)], m: &[usize]) -> Result<KnotGrid> {
    if bounds.len() != m.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} bound pairs for {} knot counts",
            bounds.len(),
            m.len()
        )));
    }
    if bounds.is_empty() {
        return Err(Error::EmptyData);
    }
    let axes = bounds
        .iter()
        .zip(m)
        .map(|(&(lb, ub), &m)| {
            if m < 2 {
                return Err(Error::TooFewKnots(m));
            }
            if !(lb.is_finite() && ub.is_finite() && lb < ub) {
                return Err(Error::BadBounds { lb, ub });
            }
            Ok(KnotAxis { lb, ub, m })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KnotGrid { axes })
}

/// Tent function centred at `knot` with half-width `spacing`.
pub fn hat_eval(x: f64, knot: f64, spacing: f64) -> f64 {
    let r = ((x - knot) / spacing).abs();
    if r <= 1.0 {
        1.0 - r
    } else {
        0.0
    }
}

/// Sparse `n×M` matrix of hat evaluations at a set of inputs.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    matrix: SparseRowMatrix,
    grid: KnotGrid,
    outside_rows: Vec<usize>,
}

impl DesignMatrix {
    pub fn matrix(&self) -> &SparseRowMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    /// Rows whose input lies outside the grid box; those rows are all zero.
    pub fn outside_rows(&self) -> &[usize] {
        &self.outside_rows
    }
}

/// Evaluates every basis function at every row of `x`.
///
/// Points outside the grid box get an empty row and are listed in
/// [`DesignMatrix::outside_rows`].
pub fn design_matrix(x: &DenseMatrix, grid: &KnotGrid) -> Result<DesignMatrix> {
    if x.cols() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "inputs of dimension {} on a {}-dimensional grid",
            x.cols(),
            grid.dim()
        )));
    }
    let knots: Vec<Vec<f64>> = grid.axes.iter().map(KnotAxis::knots).collect();
    let mut strides = Vec::with_capacity(grid.dim());
    let mut s = 1;
    for a in &grid.axes {
        strides.push(s);
        s *= a.m;
    }

    let mut rows = Vec::with_capacity(x.rows());
    let mut outside_rows = Vec::new();
    for i in 0..x.rows() {
        let point = x.row(i);
        if !grid.contains(point) {
            outside_rows.push(i);
            rows.push(Vec::new());
            continue;
        }
        let per_dim: Vec<([(usize, f64); 2], usize)> = grid
            .axes
            .iter()
            .zip(point)
            .zip(&knots)
            .map(|((a, &v), t)| a.active(v, t))
            .collect();

        // Odometer over the active hats, last dimension outermost so that
        // column indices come out ascending.
        let total: usize = per_dim.iter().map(|p| p.1).product();
        let mut row = Vec::with_capacity(total);
        let mut digits = vec![0usize; grid.dim()];
        for _ in 0..total {
            let mut col = 0;
            let mut val = 1.0;
            for (k, (active, _)) in per_dim.iter().enumerate() {
                let (j, phi) = active[digits[k]];
                col += j * strides[k];
                val *= phi;
            }
            row.push((col, val));
            for (k, digit) in digits.iter_mut().enumerate() {
                *digit += 1;
                if *digit < per_dim[k].1 {
                    break;
                }
                *digit = 0;
            }
        }
        rows.push(row);
    }
    Ok(DesignMatrix {
        matrix: SparseRowMatrix::from_rows(grid.n_basis(), &rows)?,
        grid: grid.clone(),
        outside_rows,
    })
}

fn check_grid_dim(grid: &KnotGrid, h: &Hyperparams) -> Result<()> {
    if grid.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional grid with {} lengthscales",
            grid.dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// Prior covariance of the knot values: the kernel over all grid nodes.
pub fn knot_covariance(grid: &KnotGrid, h: &Hyperparams) -> Result<DenseMatrix> {
    check_grid_dim(grid, h)?;
    let nodes = grid.nodes();
    kernel_matrix(&nodes, &nodes, h)
}

/// [`knot_covariance`] plus its derivatives in log amplitude and log lengthscales.
pub fn knot_covariance_with_grads(
    grid: &KnotGrid,
    h: &Hyperparams,
) -> Result<(DenseMatrix, Vec<DenseMatrix>)> {
    check_grid_dim(grid, h)?;
    let nodes = grid.nodes();
    kernel_matrix_with_grads(&nodes, &nodes, h)
}

/// `Φ_a·Γ·Φ_bᵀ`: the covariance implied between two sets of points by a
/// knot covariance `Γ`. Exactly symmetric when both sides are the same matrix.
pub fn project_covariance(
    phi_a: &SparseRowMatrix,
    gamma: &DenseMatrix,
    phi_b: &SparseRowMatrix,
) -> Result<DenseMatrix> {
    let right = sparse_dense_product(phi_b, gamma)?;
    let mut out = sparse_dense_product(phi_a, &right.transpose())?;
    if std::ptr::eq(phi_a, phi_b) || phi_a == phi_b {
        for i in 0..out.rows() {
            for j in (i + 1)..out.cols() {
                out[(j, i)] = out[(i, j)];
            }
        }
    }
    Ok(out)
}
