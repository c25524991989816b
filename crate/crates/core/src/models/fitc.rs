//! FITC: Nyström low-rank covariance with an exact diagonal.
//!
//! Training covariance `K_FITC = Q_ff + diag(K_ff − Q_ff)` with
//! `Q_ff = K_fu·K_uu⁻¹·K_uf`. Prediction uses the matching Q-form cross
//! covariance `Q_*f = K_*u·K_uu⁻¹·K_uf` and the full kernel on the test block.

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, kernel_matrix_with_grads, Hyperparams};
use crate::numerics::{cholesky, dot, logdet_from_factor, CholeskyFactor, DenseMatrix};

use super::exact::{column_sq_norms, latent_variance};
use super::{check_inputs, half_log_2pi, Cache, PredictOptions, Prediction, TrainedModel};

fn check_pseudo(u: &DenseMatrix, h: &Hyperparams) -> Result<()> {
    if u.rows() == 0 {
        return Err(Error::InvalidSpec("FITC needs at least one pseudo-input".into()));
    }
    check_inputs(u, h)
}

/// Low-rank pieces shared by the likelihood and prediction.
struct LowRank {
    /// Factor of `K_uu` (jittered if needed).
    luu: CholeskyFactor,
    /// `V = L_uu⁻¹·K_uf`, so `Q_ff = VᵀV`.
    v: DenseMatrix,
    /// `Λ = diag(K_ff − Q_ff) + σ²`.
    lambda: Vec<f64>,
}

impl LowRank {
    fn build(x: &DenseMatrix, u: &DenseMatrix, h: &Hyperparams) -> Result<Self> {
        check_inputs(x, h)?;
        check_pseudo(u, h)?;
        let kuu = kernel_matrix(u, u, h)?;
        let luu = cholesky(&kuu)?;
        let kuf = kernel_matrix(u, x, h)?;
        let v = luu.solve_lower(&kuf)?;
        let lambda = column_sq_norms(&v)
            .iter()
            .map(|q| h.signal_var() - q + h.noise_var())
            .collect();
        Ok(Self { luu, v, lambda })
    }

    /// Factor of `B = I + V·Λ⁻¹·Vᵀ`.
    fn inner_factor(&self) -> Result<CholeskyFactor> {
        let p = self.v.rows();
        let scaled = DenseMatrix::from_fn(p, self.v.cols(), |a, i| self.v[(a, i)] / self.lambda[i]);
        let b = scaled.matmul(&self.v.transpose())?.add_diag(1.0);
        let b = symmetrize(&b);
        cholesky(&b)
    }
}

fn symmetrize(a: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        if i <= j {
            a[(i, j)]
        } else {
            a[(j, i)]
        }
    })
}

/// Dense `K_FITC = Q_ff + diag(K_ff − Q_ff)` over the inputs `x`.
pub fn fitc_cov(x: &DenseMatrix, u: &DenseMatrix, h: &Hyperparams) -> Result<DenseMatrix> {
    let lr = LowRank::build(x, u, h)?;
    let mut q = lr.v.t_matmul(&lr.v)?;
    let n = q.rows();
    for i in 0..n {
        q[(i, i)] = h.signal_var();
        for j in (i + 1)..n {
            q[(j, i)] = q[(i, j)];
        }
    }
    Ok(q)
}

/// Exact-GP likelihood with the kernel matrix replaced by `K_FITC`, evaluated in `O(n·p²)`.
pub fn fitc_nlml(data: &Dataset, u: &DenseMatrix, h: &Hyperparams) -> Result<f64> {
    let lr = LowRank::build(&data.x, u, h)?;
    let lb = lr.inner_factor()?;
    let r: Vec<f64> = data.y.iter().map(|y| y - h.const_mean).collect();
    let r_scaled: Vec<f64> = r.iter().zip(&lr.lambda).map(|(r, l)| r / l).collect();
    // c = V·Λ⁻¹·r
    let c = lr.v.matvec(&r_scaled)?;
    let lc = lb.solve_lower(&DenseMatrix::column(&c))?;
    let quad = dot(&r, &r_scaled) - dot(lc.as_slice(), lc.as_slice());
    let logdet = lr.lambda.iter().map(|l| l.ln()).sum::<f64>() + logdet_from_factor(&lb);
    Ok(0.5 * quad + 0.5 * logdet + half_log_2pi(data.n()))
}

/// NLML and gradient, with `∂K_FITC = ∂Q + diag(∂K_ff − ∂Q)` and
/// `∂Q = ∂K_fu·A + Aᵀ·∂K_uf − Aᵀ·∂K_uu·A`, `A = K_uu⁻¹·K_uf`.
pub fn fitc_nlml_gradient(data: &Dataset, u: &DenseMatrix, h: &Hyperparams) -> Result<(f64, Vec<f64>)> {
    check_inputs(&data.x, h)?;
    check_pseudo(u, h)?;
    let x = &data.x;
    let n = data.n();
    let (kuu, duu) = kernel_matrix_with_grads(u, u, h)?;
    let (kuf, duf) = kernel_matrix_with_grads(u, x, h)?;
    let luu = cholesky(&kuu)?;
    let a = crate::numerics::solve_psd(&luu, &kuf)?;
    let q = symmetrize(&kuf.t_matmul(&a)?);
    let mut ky = q.clone();
    for i in 0..n {
        ky[(i, i)] = h.signal_var() + h.noise_var();
    }
    let factor = cholesky(&ky)?;
    let r: Vec<f64> = data.y.iter().map(|y| y - h.const_mean).collect();
    let alpha = factor.solve_vec(&r)?;
    let nlml = 0.5 * dot(&r, &alpha) + 0.5 * logdet_from_factor(&factor) + half_log_2pi(n);

    let mut w = factor.inverse();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] -= alpha[i] * alpha[j];
        }
    }

    let mut grad = Vec::with_capacity(h.n_params());
    for (t, (d_uu, d_uf)) in duu.iter().zip(&duf).enumerate() {
        // ∂K_ff on the diagonal: 2σ_se² for the amplitude, zero for lengthscales.
        let dkff_diag = if t == 0 { 2.0 * h.signal_var() } else { 0.0 };
        let cross = d_uf.t_matmul(&a)?;
        let inner = a.t_matmul(&d_uu.matmul(&a)?)?;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dq = if i == j {
                    dkff_diag
                } else {
                    cross[(i, j)] + cross[(j, i)] - inner[(i, j)]
                };
                acc += w[(i, j)] * dq;
            }
        }
        grad.push(0.5 * acc);
    }
    grad.push(h.noise_var() * w.trace());
    grad.push(-alpha.iter().sum::<f64>());
    Ok((nlml, grad))
}

#[derive(Clone, Debug)]
pub(crate) struct FitcCache {
    luu: CholeskyFactor,
    lb: CholeskyFactor,
    /// `B⁻¹·V·Λ⁻¹·r`.
    beta: Vec<f64>,
}

impl FitcCache {
    pub(crate) fn build(data: &Dataset, u: &DenseMatrix, h: &Hyperparams) -> Result<Self> {
        let lr = LowRank::build(&data.x, u, h)?;
        let lb = lr.inner_factor()?;
        let r_scaled: Vec<f64> = data
            .y
            .iter()
            .zip(&lr.lambda)
            .map(|(y, l)| (y - h.const_mean) / l)
            .collect();
        let c = lr.v.matvec(&r_scaled)?;
        let beta = lb.solve_vec(&c)?;
        Ok(Self {
            luu: lr.luu,
            lb,
            beta,
        })
    }
}

/// Mean `μ_c + W_*ᵀ·β` and covariance `K_** − W_*ᵀW_* + W_*ᵀ·B⁻¹·W_*`,
/// where `W_* = L_uu⁻¹·K_u*`.
pub fn fitc_predict(model: &TrainedModel, x_star: &DenseMatrix, opts: PredictOptions) -> Result<Prediction> {
    let Cache::Fitc(cache) = &model.cache else {
        return Err(Error::InvalidSpec("fitc_predict needs a FITC model".into()));
    };
    let h = model.params();
    let u = model.pseudo_inputs().expect("FITC model has pseudo-inputs");
    check_inputs(x_star, h)?;
    let ku_star = kernel_matrix(u, x_star, h)?;
    let w = cache.luu.solve_lower(&ku_star)?;
    let mean: Vec<f64> = w
        .t_matvec(&cache.beta)?
        .into_iter()
        .map(|v| h.const_mean + v)
        .collect();
    let z = cache.lb.solve_lower(&w)?;
    let mut variance = latent_variance(h.signal_var(), &w);
    for (v, extra) in variance.iter_mut().zip(column_sq_norms(&z)) {
        *v += extra;
    }
    let covariance = if opts.full_covariance {
        let k_ss = kernel_matrix(x_star, x_star, h)?;
        Some(k_ss.sub(&w.t_matmul(&w)?)?.add(&z.t_matmul(&z)?)?)
    } else {
        None
    };
    Prediction::assemble(mean, variance, covariance, h.noise_var(), opts, Vec::new())
}
