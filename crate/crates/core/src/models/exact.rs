use crate::dataio::Dataset;
use crate::error::Result;
use crate::kernels::{kernel_matrix, kernel_matrix_with_grads, Hyperparams};
use crate::numerics::{cholesky, dot, logdet_from_factor, CholeskyFactor, DenseMatrix};

use super::{check_inputs, half_log_2pi, Cache, PredictOptions, Prediction, TrainedModel};

fn residual(data: &Dataset, h: &Hyperparams) -> Vec<f64> {
    data.y.iter().map(|y| y - h.const_mean).collect()
}

fn factor_ky(data: &Dataset, h: &Hyperparams) -> Result<(DenseMatrix, CholeskyFactor)> {
    check_inputs(&data.x, h)?;
    let k = kernel_matrix(&data.x, &data.x, h)?;
    let factor = cholesky(&k.add_diag(h.noise_var()))?;
    Ok((k, factor))
}

/// `n/2·log 2π + ½log|K+σ²I| + ½(y−μ_c)ᵀ(K+σ²I)⁻¹(y−μ_c)`.
pub fn exact_nlml(data: &Dataset, h: &Hyperparams) -> Result<f64> {
    let (_, factor) = factor_ky(data, h)?;
    let r = residual(data, h);
    let alpha = factor.solve_vec(&r)?;
    Ok(0.5 * dot(&r, &alpha) + 0.5 * logdet_from_factor(&factor) + half_log_2pi(data.n()))
}

/// NLML and its gradient via `½·tr((K_y⁻¹ − ααᵀ)·∂K_y)`.
pub fn exact_nlml_gradient(data: &Dataset, h: &Hyperparams) -> Result<(f64, Vec<f64>)> {
    check_inputs(&data.x, h)?;
    let (k, kernel_grads) = kernel_matrix_with_grads(&data.x, &data.x, h)?;
    let factor = cholesky(&k.add_diag(h.noise_var()))?;
    let r = residual(data, h);
    let alpha = factor.solve_vec(&r)?;
    let nlml = 0.5 * dot(&r, &alpha) + 0.5 * logdet_from_factor(&factor) + half_log_2pi(data.n());

    let mut w = factor.inverse();
    let n = data.n();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] -= alpha[i] * alpha[j];
        }
    }
    let mut grad: Vec<f64> = kernel_grads
        .iter()
        .map(|dk| 0.5 * w.frobenius_inner(dk))
        .collect();
    grad.push(h.noise_var() * w.trace());
    grad.push(-alpha.iter().sum::<f64>());
    Ok((nlml, grad))
}

#[derive(Clone, Debug)]
pub(crate) struct ExactCache {
    factor: CholeskyFactor,
    alpha: Vec<f64>,
}

impl ExactCache {
    pub(crate) fn build(data: &Dataset, h: &Hyperparams) -> Result<Self> {
        let (_, factor) = factor_ky(data, h)?;
        let alpha = factor.solve_vec(&residual(data, h))?;
        Ok(Self { factor, alpha })
    }
}

/// Posterior mean `μ_c + K_*·α` and covariance `K_** − K_*·K_y⁻¹·K_*ᵀ`.
pub fn exact_predict(model: &TrainedModel, x_star: &DenseMatrix, opts: PredictOptions) -> Result<Prediction> {
    let Cache::Exact(cache) = &model.cache else {
        return Err(crate::error::Error::InvalidSpec("exact_predict needs an exact model".into()));
    };
    let h = model.params();
    check_inputs(x_star, h)?;
    let k_star = kernel_matrix(x_star, &model.data().x, h)?;
    let mean: Vec<f64> = k_star
        .matvec(&cache.alpha)?
        .into_iter()
        .map(|v| h.const_mean + v)
        .collect();
    // V = L⁻¹·K_*ᵀ, latent covariance K_** − VᵀV
    let v = cache.factor.solve_lower(&k_star.transpose())?;
    let variance = latent_variance(h.signal_var(), &v);
    let covariance = if opts.full_covariance {
        let k_ss = kernel_matrix(x_star, x_star, h)?;
        Some(k_ss.sub(&v.t_matmul(&v)?)?)
    } else {
        None
    };
    Prediction::assemble(mean, variance, covariance, h.noise_var(), opts, Vec::new())
}

/// `prior − Σ_k V_ki²` for each column `i` of `v`.
pub(crate) fn latent_variance(prior: f64, v: &DenseMatrix) -> Vec<f64> {
    column_sq_norms(v).into_iter().map(|s| prior - s).collect()
}

/// `Σ_k V_ki²` for each column `i`.
pub(crate) fn column_sq_norms(v: &DenseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; v.cols()];
    for k in 0..v.rows() {
        for (o, &x) in out.iter_mut().zip(v.row(k)) {
            *o += x * x;
        }
    }
    out
}
