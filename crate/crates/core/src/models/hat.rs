//! Hat-basis GP: `f ≈ Φ·ξ` with knot values `ξ ~ N(μ_c·1, Γ)`.
//!
//! The training covariance is `Φ·Γ·Φᵀ + σ²I`. The fast path factors
//! `Γ = L·Lᵀ`, sets `U = Φ·L` and works with the `M×M` matrix
//! `S = σ²I + UᵀU = σ²·Lᵀ(Γ⁻¹ + σ⁻²ΦᵀΦ)L`, giving
//!
//! ```text
//! (ΦΓΦᵀ + σ²I)⁻¹ = σ⁻²(I − U·S⁻¹·Uᵀ)
//! log|ΦΓΦᵀ + σ²I| = (n − M)·log σ² + log|S|
//! ```
//!
//! at `O(n·M² + M³)` cost. If `Γ` needs jitter to factor, the jittered
//! matrix is the knot covariance used by both the dense and the fast path.

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::hatbasis::{design_matrix, knot_covariance, knot_covariance_with_grads, project_covariance, KnotGrid};
use crate::kernels::Hyperparams;
use crate::numerics::{
    cholesky, dot, logdet_from_factor, sparse_dense_product, CholeskyFactor, DenseMatrix, SparseRowMatrix,
};

use super::exact::column_sq_norms;
use super::{check_inputs, half_log_2pi, Cache, PredictOptions, Prediction, TrainedModel};

/// Design matrix of the training inputs; every row must lie inside the grid.
fn training_design(x: &DenseMatrix, grid: &KnotGrid, h: &Hyperparams) -> Result<SparseRowMatrix> {
    check_inputs(x, h)?;
    let phi = design_matrix(x, grid)?;
    if let Some(&row) = phi.outside_rows().first() {
        return Err(Error::PointOutsideGrid { row });
    }
    Ok(phi.matrix().clone())
}

/// `y − Φ·(μ_c·1)`.
fn residual(data: &Dataset, phi: &SparseRowMatrix, h: &Hyperparams) -> Vec<f64> {
    data.y
        .iter()
        .zip(phi.row_sums())
        .map(|(y, s)| y - h.const_mean * s)
        .collect()
}

fn symmetrize_upper(a: &mut DenseMatrix) {
    for i in 0..a.rows() {
        for j in (i + 1)..a.cols() {
            a[(j, i)] = a[(i, j)];
        }
    }
}

/// Quantities shared by the fast-path likelihood, gradient and prediction.
struct Woodbury {
    phi: SparseRowMatrix,
    /// Factor of the (possibly jittered) knot covariance.
    lgamma: CholeskyFactor,
    u: DenseMatrix,
    /// Factor of `S = σ²I + UᵀU`.
    ls: CholeskyFactor,
    r: Vec<f64>,
    /// `S⁻¹·Uᵀ·r`.
    w: Vec<f64>,
}

impl Woodbury {
    fn build(data: &Dataset, grid: &KnotGrid, h: &Hyperparams) -> Result<Self> {
        let phi = training_design(&data.x, grid, h)?;
        let gamma = knot_covariance(grid, h)?;
        let lgamma = cholesky(&gamma)?;
        let u = sparse_dense_product(&phi, lgamma.lower())?;
        let mut s = u.t_matmul(&u)?;
        symmetrize_upper(&mut s);
        let ls = cholesky(&s.add_diag(h.noise_var()))?;
        let r = residual(data, &phi, h);
        let z = u.t_matvec(&r)?;
        let w = ls.solve_vec(&z)?;
        Ok(Self {
            phi,
            lgamma,
            u,
            ls,
            r,
            w,
        })
    }

    fn nlml(&self, h: &Hyperparams) -> Result<f64> {
        let n = self.r.len();
        let m = self.w.len();
        let s2 = h.noise_var();
        // rᵀ(ΦΓΦᵀ+σ²I)⁻¹r = σ⁻²‖r − U·w‖² + ‖w‖², free of cancellation
        let fitted = self.u.matvec(&self.w)?;
        let e2: f64 = self.r.iter().zip(&fitted).map(|(r, f)| (r - f) * (r - f)).sum();
        let quad = e2 / s2 + dot(&self.w, &self.w);
        let logdet = (n as f64 - m as f64) * s2.ln() + logdet_from_factor(&self.ls);
        Ok(0.5 * quad + 0.5 * logdet + half_log_2pi(n))
    }
}

/// Hat-GP NLML through the explicit `n×n` covariance `Φ·Γ·Φᵀ + σ²I`.
pub fn hat_nlml_dense(data: &Dataset, grid: &KnotGrid, h: &Hyperparams) -> Result<f64> {
    let phi = training_design(&data.x, grid, h)?;
    let gamma = knot_covariance(grid, h)?;
    let jitter = cholesky(&gamma)?.applied_jitter();
    let kxx = project_covariance(&phi, &gamma.add_diag(jitter), &phi)?;
    let factor = cholesky(&kxx.add_diag(h.noise_var()))?;
    let r = residual(data, &phi, h);
    let alpha = factor.solve_vec(&r)?;
    Ok(0.5 * dot(&r, &alpha) + 0.5 * logdet_from_factor(&factor) + half_log_2pi(data.n()))
}

/// Hat-GP NLML via the Woodbury identity and the matching determinant lemma.
pub fn hat_nlml_woodbury(data: &Dataset, grid: &KnotGrid, h: &Hyperparams) -> Result<f64> {
    Woodbury::build(data, grid, h)?.nlml(h)
}

/// NLML and gradient in `O(n·M² + M³)`.
///
/// With `α = K_y⁻¹·r`, `β = Φᵀα` and `P = Φᵀ·K_y⁻¹·Φ`, a kernel parameter
/// contributes `½(tr(P·∂Γ) − βᵀ·∂Γ·β)`.
pub fn hat_nlml_gradient(data: &Dataset, grid: &KnotGrid, h: &Hyperparams) -> Result<(f64, Vec<f64>)> {
    let wb = Woodbury::build(data, grid, h)?;
    let nlml = wb.nlml(h)?;
    let n = data.n();
    let m = grid.n_basis();
    let s2 = h.noise_var();

    let (gamma, gamma_grads) = knot_covariance_with_grads(grid, h)?;
    let jitter = wb.lgamma.applied_jitter();

    // α = σ⁻²(r − U·w)
    let fitted = wb.u.matvec(&wb.w)?;
    let alpha: Vec<f64> = wb.r.iter().zip(&fitted).map(|(r, f)| (r - f) / s2).collect();
    let beta = wb.phi.t_matvec(&alpha)?;

    // P = σ⁻²(G − H·S⁻¹·Hᵀ) with G = ΦᵀΦ, H = G·L
    let g = gram(&wb.phi, m);
    let hmat = g.matmul(wb.lgamma.lower())?;
    let y = wb.ls.solve_lower(&hmat.transpose())?;
    let p = g.sub(&y.t_matmul(&y)?)?.scale(1.0 / s2);

    let mut grad = Vec::with_capacity(h.n_params());
    for (t, dgamma) in gamma_grads.iter().enumerate() {
        // the ladder jitter scales with σ_se², so it moves with the amplitude
        let dgamma = if t == 0 {
            gamma.add_diag(jitter).scale(2.0)
        } else {
            dgamma.clone()
        };
        let quad = dot(&beta, &dgamma.matvec(&beta)?);
        grad.push(0.5 * (p.frobenius_inner(&dgamma) - quad));
    }
    // tr(K_y⁻¹) = σ⁻²(n − M) + tr(S⁻¹)
    let ls_inv = wb.ls.solve_lower(&DenseMatrix::identity(m))?;
    let trace_s_inv: f64 = ls_inv.as_slice().iter().map(|v| v * v).sum();
    let trace_kinv = (n as f64 - m as f64) / s2 + trace_s_inv;
    grad.push(s2 * (trace_kinv - dot(&alpha, &alpha)));
    grad.push(-dot(&wb.phi.row_sums(), &alpha));
    Ok((nlml, grad))
}

/// Dense `ΦᵀΦ` accumulated from the sparse rows.
fn gram(phi: &SparseRowMatrix, m: usize) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(m, m);
    for i in 0..phi.rows() {
        let (cols, vals) = phi.row(i);
        for (&a, &va) in cols.iter().zip(vals) {
            for (&b, &vb) in cols.iter().zip(vals) {
                g[(a, b)] += va * vb;
            }
        }
    }
    g
}

#[derive(Clone, Debug)]
pub(crate) struct HatCache {
    lgamma: CholeskyFactor,
    ls: CholeskyFactor,
    w: Vec<f64>,
}

impl HatCache {
    pub(crate) fn build(data: &Dataset, grid: &KnotGrid, h: &Hyperparams) -> Result<Self> {
        let wb = Woodbury::build(data, grid, h)?;
        Ok(Self {
            lgamma: wb.lgamma,
            ls: wb.ls,
            w: wb.w,
        })
    }
}

/// Posterior mean `Φ_*·μ_c·1 + U_*·w` and latent covariance `σ²·U_*·S⁻¹·U_*ᵀ`,
/// with `U_* = Φ_*·L`.
///
/// Test points outside the grid are rejected unless `allow_outside_grid` is
/// set, in which case their basis row is empty and mean and latent variance
/// are zero.
pub fn hat_predict(model: &TrainedModel, x_star: &DenseMatrix, opts: PredictOptions) -> Result<Prediction> {
    let Cache::Hat(cache) = &model.cache else {
        return Err(Error::InvalidSpec("hat_predict needs a hat model".into()));
    };
    let h = model.params();
    let grid = model.grid().expect("hat model has a grid");
    check_inputs(x_star, h)?;
    let design = design_matrix(x_star, grid)?;
    let outside = design.outside_rows().to_vec();
    if !opts.allow_outside_grid {
        if let Some(&row) = outside.first() {
            return Err(Error::PointOutsideGrid { row });
        }
    }
    let phi_star = design.matrix();
    let u_star = sparse_dense_product(phi_star, cache.lgamma.lower())?;
    let mean: Vec<f64> = u_star
        .matvec(&cache.w)?
        .into_iter()
        .zip(phi_star.row_sums())
        .map(|(f, s)| h.const_mean * s + f)
        .collect();
    let s2 = h.noise_var();
    let y = cache.ls.solve_lower(&u_star.transpose())?;
    let variance: Vec<f64> = column_sq_norms(&y).into_iter().map(|v| s2 * v).collect();
    let covariance = if opts.full_covariance {
        Some(y.t_matmul(&y)?.scale(s2))
    } else {
        None
    };
    Prediction::assemble(mean, variance, covariance, s2, opts, outside)
}
