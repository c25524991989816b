//! Brute-force reference implementations. They share no code with the
//! library beyond its data types: plain `Vec<Vec<f64>>` matrices, explicit
//! inverses by Gauss–Jordan elimination and determinants by LU.
#![allow(dead_code)]
// index loops read closest to the textbook algorithms here
#![allow(clippy::needless_range_loop)]

use hatgp::dataio::Dataset;
use hatgp::kernels::Hyperparams;
use hatgp::numerics::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(a: &DenseMatrix) -> Mat {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

pub fn rows_of(x: &DenseMatrix) -> Vec<Vec<f64>> {
    to_mat(x)
}

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn mul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn mul_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn add_diag(a: &Mat, s: f64) -> Mat {
    let mut out = a.clone();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] += s;
    }
    out
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut aug: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        assert!(p != 0.0, "singular matrix in oracle");
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for i in 0..n {
            if i != col {
                let f = aug[i][col];
                if f != 0.0 {
                    for j in 0..2 * n {
                        aug[i][j] -= f * aug[col][j];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `log|det A|` by LU with partial pivoting.
pub fn log_abs_det(a: &Mat) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut acc = 0.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        acc += p.abs().ln();
        for i in (col + 1)..n {
            let f = m[i][col] / p;
            for j in col..n {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    acc
}

/// Determinant by cofactor expansion along the first row (small matrices only).
pub fn cofactor_det(a: &Mat) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        _ => (0..n)
            .map(|j| {
                let minor: Mat = a[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * cofactor_det(&minor)
            })
            .sum(),
    }
}

/// `σ_se²·exp(−½ Σ_k (a_k − b_k)² / l_k²)`.
pub fn se(a: &[f64], b: &[f64], h: &Hyperparams) -> f64 {
    let q: f64 = a
        .iter()
        .zip(b)
        .zip(&h.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    h.amplitude * h.amplitude * (-0.5 * q).exp()
}

pub fn gram(a: &[Vec<f64>], b: &[Vec<f64>], h: &Hyperparams) -> Mat {
    a.iter().map(|p| b.iter().map(|q| se(p, q, h)).collect()).collect()
}

/// Gaussian NLML of residuals `r` under covariance `c`, by explicit inverse.
pub fn gaussian_nlml(c: &Mat, r: &[f64]) -> f64 {
    let inv = inverse(c);
    let quad: f64 = r.iter().zip(mul_vec(&inv, r)).map(|(a, b)| a * b).sum();
    let n = r.len() as f64;
    0.5 * quad + 0.5 * log_abs_det(c) + 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Posterior mean and latent covariance given prior blocks:
/// `mean = m_* + C_*f·C_ff⁻¹·r`, `cov = C_** − C_*f·C_ff⁻¹·C_f*`.
pub fn gaussian_posterior(c_ff: &Mat, c_sf: &Mat, c_ss: &Mat, prior_mean_star: &[f64], r: &[f64]) -> (Vec<f64>, Mat) {
    let inv = inverse(c_ff);
    let alpha = mul_vec(&inv, r);
    let mean = mul_vec(c_sf, &alpha)
        .into_iter()
        .zip(prior_mean_star)
        .map(|(a, m)| a + m)
        .collect();
    let cov = sub(c_ss, &mul(&mul(c_sf, &inv), &transpose(c_sf)));
    (mean, cov)
}

pub struct Posterior {
    pub nlml: f64,
    pub mean: Vec<f64>,
    pub cov: Mat,
}

pub fn exact_oracle(x: &[Vec<f64>], y: &[f64], xs: &[Vec<f64>], h: &Hyperparams) -> Posterior {
    let kff = add_diag(&gram(x, x, h), h.noise_std * h.noise_std);
    let r: Vec<f64> = y.iter().map(|v| v - h.const_mean).collect();
    let (mean, cov) = gaussian_posterior(&kff, &gram(xs, x, h), &gram(xs, xs, h), &vec![h.const_mean; xs.len()], &r);
    Posterior {
        nlml: gaussian_nlml(&kff, &r),
        mean,
        cov,
    }
}

/// `K_au·K_uu⁻¹·K_ub`.
pub fn nystrom(a: &[Vec<f64>], u: &[Vec<f64>], b: &[Vec<f64>], h: &Hyperparams) -> Mat {
    mul(&mul(&gram(a, u, h), &inverse(&gram(u, u, h))), &gram(u, b, h))
}

pub fn fitc_oracle(x: &[Vec<f64>], y: &[f64], u: &[Vec<f64>], xs: &[Vec<f64>], h: &Hyperparams) -> Posterior {
    let q = nystrom(x, u, x, h);
    let mut kff = q.clone();
    for (i, row) in kff.iter_mut().enumerate() {
        row[i] = h.amplitude * h.amplitude + h.noise_std * h.noise_std;
    }
    let r: Vec<f64> = y.iter().map(|v| v - h.const_mean).collect();
    let (mean, cov) = gaussian_posterior(
        &kff,
        &nystrom(xs, u, x, h),
        &gram(xs, xs, h),
        &vec![h.const_mean; xs.len()],
        &r,
    );
    Posterior {
        nlml: gaussian_nlml(&kff, &r),
        mean,
        cov,
    }
}

/// Knots of one axis: `lb + jΔ`, the last one pinned to `ub`.
pub fn knots(lb: f64, ub: f64, m: usize) -> Vec<f64> {
    let delta = (ub - lb) / (m - 1) as f64;
    (0..m).map(|j| if j + 1 == m { ub } else { lb + j as f64 * delta }).collect()
}

/// All grid nodes, first dimension fastest.
pub fn nodes(bounds: &[(f64, f64)], m: &[usize]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = bounds.iter().zip(m).map(|(&(lb, ub), &mk)| knots(lb, ub, mk)).collect();
    let total: usize = m.iter().product();
    (0..total)
        .map(|mut idx| {
            axes.iter()
                .zip(m)
                .map(|(axis, &mk)| {
                    let j = idx % mk;
                    idx /= mk;
                    axis[j]
                })
                .collect()
        })
        .collect()
}

/// Dense design matrix by evaluating every tensor hat at every point;
/// points outside the box get a zero row.
pub fn design(points: &[Vec<f64>], bounds: &[(f64, f64)], m: &[usize]) -> Mat {
    let nodes = nodes(bounds, m);
    let spacing: Vec<f64> = bounds.iter().zip(m).map(|(&(lb, ub), &mk)| (ub - lb) / (mk - 1) as f64).collect();
    points
        .iter()
        .map(|p| {
            let inside = p.iter().zip(bounds).all(|(v, &(lb, ub))| *v >= lb && *v <= ub);
            nodes
                .iter()
                .map(|node| {
                    if !inside {
                        return 0.0;
                    }
                    p.iter()
                        .zip(node)
                        .zip(&spacing)
                        .map(|((v, t), d)| (1.0 - ((v - t) / d).abs()).max(0.0))
                        .product()
                })
                .collect()
        })
        .collect()
}

pub fn hat_oracle(
    x: &[Vec<f64>],
    y: &[f64],
    xs: &[Vec<f64>],
    bounds: &[(f64, f64)],
    m: &[usize],
    h: &Hyperparams,
) -> Posterior {
    let nodes = nodes(bounds, m);
    let gamma = gram(&nodes, &nodes, h);
    let phi = design(x, bounds, m);
    let phis = design(xs, bounds, m);
    let proj = |a: &Mat, b: &Mat| mul(&mul(a, &gamma), &transpose(b));
    let kff = add_diag(&proj(&phi, &phi), h.noise_std * h.noise_std);
    let rowsum = |a: &Mat| a.iter().map(|r| r.iter().sum::<f64>()).collect::<Vec<f64>>();
    let r: Vec<f64> = y.iter().zip(rowsum(&phi)).map(|(v, s)| v - h.const_mean * s).collect();
    let prior_star: Vec<f64> = rowsum(&phis).into_iter().map(|s| h.const_mean * s).collect();
    let (mean, cov) = gaussian_posterior(&kff, &proj(&phis, &phi), &proj(&phis, &phis), &prior_star, &r);
    Posterior {
        nlml: gaussian_nlml(&kff, &r),
        mean,
        cov,
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Normwise relative error `max|a − b| / max|b|` (absolute if `b` vanishes).
pub fn rel_err_vec(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn rel_err_mat(a: &DenseMatrix, b: &Mat) -> f64 {
    let flat: Vec<f64> = b.iter().flatten().copied().collect();
    rel_err_vec(a.as_slice(), &flat)
}

/// A small random regression problem.
pub struct Instance {
    pub d: usize,
    pub bounds: Vec<(f64, f64)>,
    pub m: Vec<usize>,
    pub pseudo: usize,
    pub data: Dataset,
    pub x_star: DenseMatrix,
    pub h: Hyperparams,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> Instance {
    let d = rng.random_range(1..=2usize);
    let n = rng.random_range(2..=max_n);
    let m = if d == 1 { vec![rng.random_range(2..=5usize)] } else { vec![2, 2] };
    let bounds = vec![(0.0, 2.0); d];
    let point = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.random_range(0.0..2.0)).collect::<Vec<f64>>();
    let xs: Vec<Vec<f64>> = (0..n).map(|_| point(rng)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let stars: Vec<Vec<f64>> = (0..4).map(|_| point(rng)).collect();
    let h = Hyperparams::new(
        rng.random_range(0.5..2.0),
        (0..d).map(|_| rng.random_range(0.3..1.5)).collect(),
        rng.random_range(0.05..0.5),
        rng.random_range(-1.0..1.0),
    )
    .unwrap();
    Instance {
        d,
        bounds,
        m,
        pseudo: rng.random_range(1..=n.min(3)),
        data: Dataset::in_memory(DenseMatrix::from_rows(&xs).unwrap(), ys).unwrap(),
        x_star: DenseMatrix::from_rows(&stars).unwrap(),
        h,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central finite differences of `f` in each coordinate.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[i] += step;
            lo[i] -= step;
            (f(&hi) - f(&lo)) / (2.0 * step)
        })
        .collect()
}
