//! Hyperparameter fitting by quasi-Newton minimization of the NLML.
//!
//! Positive parameters are optimized in log space; the constant mean is left
//! as is. Each restart runs BFGS with a backtracking (Armijo) line search and
//! the restart with the lowest final NLML wins.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, ErrorKind, Result};
use crate::kernels::Hyperparams;
use crate::models::{ModelSpec, ResolvedSpec, TrainedModel};
use crate::numerics::dot;

/// Settings for [`fit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop once the gradient norm in the unconstrained space falls below this.
    pub grad_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Multiplicative range, in log space, for perturbing the initial
    /// amplitude, lengthscales and noise on restarts after the first.
    pub init_log_range: (f64, f64),
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-5,
            restarts: 3,
            seed: 0,
            init_log_range: (0.1f64.ln(), 10f64.ln()),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max-iters must be >= 1".into()));
        }
        if self.grad_tol.is_nan() || self.grad_tol <= 0.0 {
            return Err(Error::Config("grad_tol must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        let (lo, hi) = self.init_log_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config("invalid initialization range".into()));
        }
        Ok(())
    }
}

/// Outcome of one restart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub initial: Hyperparams,
    pub initial_nlml: Option<f64>,
    pub final_nlml: Option<f64>,
    pub iterations: usize,
    pub grad_norm: Option<f64>,
    pub termination: Option<Termination>,
    pub error: Option<String>,
}

/// Summary of a [`fit`] call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub final_nlml: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// How the winning run ended: gradient tolerance met, iteration cap, or stalled.
    pub termination: Termination,
    pub winner_restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub wall_time_secs: f64,
}

/// `(log σ_se, log l_1, …, log l_d, log σ, μ_c)`.
pub fn to_unconstrained(h: &Hyperparams) -> Result<Vec<f64>> {
    h.validate()?;
    let mut v = Vec::with_capacity(h.n_params());
    v.push(h.amplitude.ln());
    v.extend(h.lengthscales.iter().map(|l| l.ln()));
    v.push(h.noise_std.ln());
    v.push(h.const_mean);
    Ok(v)
}

/// Inverse of [`to_unconstrained`]; the input dimension is `v.len() − 3`.
pub fn from_unconstrained(v: &[f64]) -> Result<Hyperparams> {
    if v.len() < 4 {
        return Err(Error::DimensionMismatch(format!(
            "parameter vector of length {} (need at least 4)",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("parameter vector"));
    }
    let d = v.len() - 3;
    Hyperparams::new(
        v[0].exp(),
        v[1..=d].iter().map(|x| x.exp()).collect(),
        v[d + 1].exp(),
        v[d + 2],
    )
}

/// A smooth function with its gradient, as seen by [`minimize`].
pub trait Objective {
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self(x)
    }
}

/// Why a minimization stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gradient norm reached the tolerance.
    Converged,
    MaxIters,
    /// No line search could decrease the objective, or the decrease stayed
    /// at rounding level for several iterations.
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl MinimizeResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Longest step allowed in the unconstrained space.
const MAX_STEP_NORM: f64 = 3.0;
/// Decreases below this fraction of `max(|f|, 1)` count as no progress…
const STALL_RTOL: f64 = 1e-13;
/// …and this many in a row end the run.
const STALL_ITERS: usize = 5;

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Backtracking search along `dir`; `None` when no sufficient decrease is found.
fn line_search<O: Objective + ?Sized>(
    obj: &O,
    x: &[f64],
    f: f64,
    g: &[f64],
    dir: &[f64],
    initial_step: f64,
) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let slope = dot(g, dir);
    if slope.is_nan() || slope >= 0.0 {
        return None;
    }
    let mut step = initial_step;
    for _ in 0..MAX_BACKTRACKS {
        let trial: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + step * di).collect();
        if let Ok((ft, gt)) = obj.value_and_gradient(&trial) {
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= f + ARMIJO_C1 * step * slope {
                return Some((trial, ft, gt));
            }
        }
        step *= 0.5;
    }
    None
}

/// BFGS on the inverse Hessian with a backtracking line search.
///
/// A failed quasi-Newton line search falls back to steepest descent; the run
/// stops early (unconverged) if that fails as well.
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    max_iters: usize,
    grad_tol: f64,
) -> Result<MinimizeResult> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj.value_and_gradient(&x)?;
    if !f.is_finite() {
        return Err(Error::NonFinite("objective at the initial point"));
    }
    let mut hinv = identity(n);
    let mut fresh = true;
    let mut iterations = 0;
    let mut stalled = 0;
    let done = |x, value, grad_norm, iterations, termination| MinimizeResult {
        x,
        value,
        grad_norm,
        iterations,
        termination,
    };
    while iterations < max_iters {
        let gnorm = norm(&g);
        if gnorm <= grad_tol {
            return Ok(done(x, f, gnorm, iterations, Termination::Converged));
        }
        iterations += 1;

        let mut dir: Vec<f64> = hinv.iter().map(|row| -dot(row, &g)).collect();
        if dot(&dir, &g) >= 0.0 {
            hinv = identity(n);
            fresh = true;
            dir = g.iter().map(|v| -v).collect();
        }
        let dnorm = norm(&dir);
        let mut step = if fresh { 1.0 / dnorm.max(1.0) } else { 1.0 };
        if step * dnorm > MAX_STEP_NORM {
            step = MAX_STEP_NORM / dnorm;
        }
        let accepted = line_search(obj, &x, f, &g, &dir, step).or_else(|| {
            // steepest-descent fallback
            let sd: Vec<f64> = g.iter().map(|v| -v).collect();
            let step = (1.0 / gnorm).min(MAX_STEP_NORM / gnorm);
            line_search(obj, &x, f, &g, &sd, step)
        });
        let Some((x_new, f_new, g_new)) = accepted else {
            return Ok(done(x, f, gnorm, iterations, Termination::Stalled));
        };
        if f - f_new <= STALL_RTOL * f.abs().max(1.0) {
            stalled += 1;
        } else {
            stalled = 0;
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                hinv = identity(n);
                for (i, row) in hinv.iter_mut().enumerate() {
                    row[i] = scale;
                }
                fresh = false;
            }
            bfgs_update(&mut hinv, &s, &y, sy);
        }
        x = x_new;
        f = f_new;
        g = g_new;
        if stalled >= STALL_ITERS {
            let gnorm = norm(&g);
            let why = if gnorm <= grad_tol {
                Termination::Converged
            } else {
                Termination::Stalled
            };
            return Ok(done(x, f, gnorm, iterations, why));
        }
    }
    let gnorm = norm(&g);
    let why = if gnorm <= grad_tol {
        Termination::Converged
    } else {
        Termination::MaxIters
    };
    Ok(done(x, f, gnorm, iterations, why))
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// `H ← (I − ρsyᵀ)·H·(I − ρysᵀ) + ρssᵀ`, `ρ = 1/(sᵀy)`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Scale-aware starting point: lengthscales from the median pairwise
/// distance per dimension, amplitude from `std(y)`, noise from `0.1·std(y)`,
/// mean from `mean(y)`.
pub fn initial_params(data: &Dataset) -> Result<Hyperparams> {
    let std = data.y_std();
    let std = if std > 0.0 { std } else { 1.0 };
    let lengthscales = (0..data.dim())
        .map(|k| {
            let med = median_pairwise_distance(&data.x.col(k));
            if med > 0.0 {
                med
            } else {
                1.0
            }
        })
        .collect();
    Hyperparams::new(std, lengthscales, 0.1 * std, data.y_mean())
}

/// Median of `|a_i − a_j|` over an evenly strided subset of at most 500 values.
fn median_pairwise_distance(values: &[f64]) -> f64 {
    const MAX_POINTS: usize = 500;
    let stride = values.len().div_ceil(MAX_POINTS).max(1);
    let sub: Vec<f64> = values.iter().step_by(stride).copied().collect();
    let mut dists = Vec::with_capacity(sub.len() * sub.len().saturating_sub(1) / 2);
    for i in 0..sub.len() {
        for j in (i + 1)..sub.len() {
            dists.push((sub[i] - sub[j]).abs());
        }
    }
    if dists.is_empty() {
        return 0.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    }
}

/// Restart starting points: the heuristic first, then seeded log-uniform perturbations.
fn restart_starts(base: &Hyperparams, cfg: &OptimizerConfig) -> Result<Vec<Vec<f64>>> {
    let base_v = to_unconstrained(base)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.init_log_range;
    let mean_slot = base_v.len() - 1;
    let mut starts = vec![base_v.clone()];
    for _ in 1..cfg.restarts {
        let v = base_v
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                if i == mean_slot || lo == hi {
                    b
                } else {
                    b + rng.random_range(lo..hi)
                }
            })
            .collect();
        starts.push(v);
    }
    Ok(starts)
}

/// Trains `spec` on `data`: resolves its structure, runs `cfg.restarts`
/// minimizations, and keeps the lowest final NLML (ties go to the lowest restart index).
pub fn fit(spec: &ModelSpec, data: &Dataset, cfg: &OptimizerConfig) -> Result<(TrainedModel, FitReport)> {
    cfg.validate()?;
    let started = Instant::now();
    let resolved = spec.resolve(data)?;
    let base = initial_params(data)?;
    let (params, mut report) = optimize(&resolved, data, &base, cfg)?;
    let model = TrainedModel::new(spec.clone(), resolved, data.clone(), params)?;
    report.wall_time_secs = started.elapsed().as_secs_f64();
    Ok((model, report))
}

/// Restarted minimization of the NLML of a resolved model, starting around `base`.
pub fn optimize(
    resolved: &ResolvedSpec,
    data: &Dataset,
    base: &Hyperparams,
    cfg: &OptimizerConfig,
) -> Result<(Hyperparams, FitReport)> {
    cfg.validate()?;
    if base.dim() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} lengthscales for {}-dimensional data",
            base.dim(),
            data.dim()
        )));
    }
    optimize_with(|h| resolved.nlml_gradient(data, h), base, cfg)
}

/// Restarted minimization of any NLML-like objective over hyperparameters;
/// the gradient must be in the unconstrained parameterisation.
pub fn optimize_with<F>(nlml_gradient: F, base: &Hyperparams, cfg: &OptimizerConfig) -> Result<(Hyperparams, FitReport)>
where
    F: Fn(&Hyperparams) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    let objective = |v: &[f64]| -> Result<(f64, Vec<f64>)> { nlml_gradient(&from_unconstrained(v)?) };

    let mut summaries = Vec::with_capacity(cfg.restarts);
    let mut best: Option<(usize, MinimizeResult)> = None;
    let mut failures = Vec::new();
    for (k, start) in restart_starts(base, cfg)?.into_iter().enumerate() {
        let initial = from_unconstrained(&start)?;
        let initial_nlml = objective(&start).ok().map(|(f, _)| f);
        match minimize(&objective, &start, cfg.max_iters, cfg.grad_tol) {
            Ok(res) => {
                summaries.push(RestartSummary {
                    initial,
                    initial_nlml,
                    final_nlml: Some(res.value),
                    iterations: res.iterations,
                    grad_norm: Some(res.grad_norm),
                    termination: Some(res.termination),
                    error: None,
                });
                if best.as_ref().is_none_or(|(_, b)| res.value < b.value) {
                    best = Some((k, res));
                }
            }
            Err(e) => {
                if e.kind() != ErrorKind::Numerical {
                    return Err(e);
                }
                summaries.push(RestartSummary {
                    initial,
                    initial_nlml,
                    final_nlml: None,
                    iterations: 0,
                    grad_norm: None,
                    termination: None,
                    error: Some(e.to_string()),
                });
                failures.push(Error::RestartFailed {
                    restart: k,
                    source: Box::new(e),
                });
            }
        }
    }
    let Some((winner, res)) = best else {
        return Err(Error::AllRestartsFailed(failures.len()));
    };
    let params = from_unconstrained(&res.x)?;
    Ok((
        params,
        FitReport {
            final_nlml: res.value,
            iterations: res.iterations,
            grad_norm: res.grad_norm,
            termination: res.termination,
            winner_restart: winner,
            restarts: summaries,
            wall_time_secs: 0.0,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_params_map_to_zero() {
        let h = Hyperparams::new(1.0, vec![1.0], 1.0, 0.0).unwrap();
        let v = to_unconstrained(&h).unwrap();
        assert_eq!(v, vec![0.0; 4]);
        assert_eq!(from_unconstrained(&v).unwrap(), h);
        let e = Hyperparams::new(std::f64::consts::E, vec![1.0], 1.0, 0.0).unwrap();
        assert_eq!(to_unconstrained(&e).unwrap()[0], 1.0);
    }

    #[test]
    fn transform_errors() {
        let bad = Hyperparams {
            amplitude: -1.0,
            lengthscales: vec![1.0],
            noise_std: 1.0,
            const_mean: 0.0,
        };
        assert!(matches!(to_unconstrained(&bad), Err(Error::NonPositiveParameter { .. })));
        assert!(from_unconstrained(&[0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(from_unconstrained(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn quadratic_converges_to_minimizer() {
        // f(x) = ½(x−c)ᵀA(x−c)
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]];
        let c = [1.5, -2.0, 0.25];
        let obj = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let d: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
            let ad: Vec<f64> = a.iter().map(|row| dot(row, &d)).collect();
            Ok((0.5 * dot(&d, &ad), ad))
        };
        let res = minimize(&obj, &[0.0, 0.0, 0.0], 200, 1e-12).unwrap();
        assert!(res.converged());
        for (x, c) in res.x.iter().zip(&c) {
            assert!((x - c).abs() <= 1e-8, "{x} vs {c}");
        }
    }

    #[test]
    fn rosenbrock_makes_progress() {
        let obj = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((f, g))
        };
        let res = minimize(&obj, &[-1.2, 1.0], 500, 1e-8).unwrap();
        assert!(res.converged());
        assert!((res.x[0] - 1.0).abs() < 1e-5 && (res.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn config_validation() {
        let mut cfg = OptimizerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.restarts = 0;
        assert!(cfg.validate().is_err());
        let cfg = OptimizerConfig {
            max_iters: 0,
            ..OptimizerConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn median_distance() {
        assert_eq!(median_pairwise_distance(&[0.0, 1.0, 3.0]), 2.0);
        assert_eq!(median_pairwise_distance(&[2.0]), 0.0);
    }

    proptest! {
        #[test]
        fn transform_round_trips(
            amp in 1e-3f64..1e3, l1 in 1e-3f64..1e3, l2 in 1e-3f64..1e3,
            noise in 1e-6f64..10.0, mean in -100.0f64..100.0,
        ) {
            let h = Hyperparams::new(amp, vec![l1, l2], noise, mean).unwrap();
            let back = from_unconstrained(&to_unconstrained(&h).unwrap()).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * a.abs().max(1.0);
            prop_assert!(close(back.amplitude, amp));
            prop_assert!(close(back.lengthscales[0], l1));
            prop_assert!(close(back.lengthscales[1], l2));
            prop_assert!(close(back.noise_std, noise));
            prop_assert_eq!(back.const_mean, mean);
        }
    }
}
