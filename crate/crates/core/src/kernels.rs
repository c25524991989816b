//! Squared-exponential covariance functions.
//!
//! Only the isotropic SE kernel and its ARD product form are provided; both
//! share the [`Hyperparams`] vector `(amplitude, lengthscales, noise_std, const_mean)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Full trainable parameter set of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub amplitude: f64,
    pub lengthscales: Vec<f64>,
    pub noise_std: f64,
    pub const_mean: f64,
}

impl Hyperparams {
    pub fn new(amplitude: f64, lengthscales: Vec<f64>, noise_std: f64, const_mean: f64) -> Result<Self> {
        let h = Self {
            amplitude,
            lengthscales,
            noise_std,
            const_mean,
        };
        h.validate()?;
        Ok(h)
    }

    /// Same lengthscale in every one of `dim` dimensions.
    pub fn isotropic(amplitude: f64, lengthscale: f64, dim: usize, noise_std: f64, const_mean: f64) -> Result<Self> {
        Self::new(amplitude, vec![lengthscale; dim], noise_std, const_mean)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("amplitude", self.amplitude)?;
        check_positive("noise_std", self.noise_std)?;
        if self.lengthscales.is_empty() {
            return Err(Error::InvalidSpec("at least one lengthscale is required".into()));
        }
        for &l in &self.lengthscales {
            check_positive("lengthscale", l)?;
        }
        if !self.const_mean.is_finite() {
            return Err(Error::NonFinite("const_mean"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Number of trainable scalars: amplitude, `d` lengthscales, noise, mean.
    pub fn n_params(&self) -> usize {
        self.dim() + 3
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    pub fn signal_var(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

/// One-dimensional SE kernel `σ_se²·exp(−(a−b)²/(2l²))`, using the first lengthscale.
pub fn se_kernel(a: f64, b: f64, h: &Hyperparams) -> f64 {
    debug_assert_eq!(h.dim(), 1);
    let l = h.lengthscales[0];
    let r = (a - b) / l;
    h.signal_var() * (-0.5 * r * r).exp()
}

/// ARD SE kernel with one lengthscale per input dimension.
pub fn ard_se_kernel(a: &[f64], b: &[f64], h: &Hyperparams) -> Result<f64> {
    if a.len() != h.dim() || b.len() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "points of dimension {} and {} with {} lengthscales",
            a.len(),
            b.len(),
            h.dim()
        )));
    }
    Ok(ard_unchecked(a, b, h))
}

#[inline]
fn scaled_sq_dist(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((x, y), l)| {
            let r = (x - y) / l;
            r * r
        })
        .sum()
}

#[inline]
fn ard_unchecked(a: &[f64], b: &[f64], h: &Hyperparams) -> f64 {
    h.signal_var() * (-0.5 * scaled_sq_dist(a, b, &h.lengthscales)).exp()
}

fn check_dims(a: &DenseMatrix, b: &DenseMatrix, h: &Hyperparams) -> Result<()> {
    if a.cols() != h.dim() || b.cols() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "inputs of dimension {} and {} with {} lengthscales",
            a.cols(),
            b.cols(),
            h.dim()
        )));
    }
    Ok(())
}

/// Cross-covariance between the rows of `a` (p×d) and the rows of `b` (q×d).
///
/// When `a` and `b` hold the same points the upper triangle is computed and
/// mirrored, so the result is exactly symmetric.
pub fn kernel_matrix(a: &DenseMatrix, b: &DenseMatrix, h: &Hyperparams) -> Result<DenseMatrix> {
    check_dims(a, b, h)?;
    if std::ptr::eq(a, b) || a == b {
        return Ok(symmetric_kernel_matrix(a, h));
    }
    Ok(DenseMatrix::from_fn(a.rows(), b.rows(), |i, j| {
        ard_unchecked(a.row(i), b.row(j), h)
    }))
}

fn symmetric_kernel_matrix(a: &DenseMatrix, h: &Hyperparams) -> DenseMatrix {
    let n = a.rows();
    let mut k = DenseMatrix::zeros(n, n);
    let var = h.signal_var();
    for i in 0..n {
        k[(i, i)] = var;
        for j in (i + 1)..n {
            let v = ard_unchecked(a.row(i), a.row(j), h);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Kernel matrix together with its derivatives with respect to
/// `log amplitude` and each `log lengthscale`, in that order.
pub fn kernel_matrix_with_grads(
    a: &DenseMatrix,
    b: &DenseMatrix,
    h: &Hyperparams,
) -> Result<(DenseMatrix, Vec<DenseMatrix>)> {
    let k = kernel_matrix(a, b, h)?;
    let mut grads = Vec::with_capacity(h.dim() + 1);
    grads.push(k.scale(2.0));
    for (dim, &l) in h.lengthscales.iter().enumerate() {
        let inv_l2 = 1.0 / (l * l);
        grads.push(DenseMatrix::from_fn(a.rows(), b.rows(), |i, j| {
            let diff = a[(i, dim)] - b[(j, dim)];
            k[(i, j)] * diff * diff * inv_l2
        }));
    }
    Ok((k, grads))
}
