//! Exact, FITC and hat-basis Gaussian-process regression.
//!
//! Every model exposes the negative log marginal likelihood (NLML), its
//! gradient in the unconstrained parameterisation
//! `(log σ_se, log l_1, …, log l_d, log σ, μ_c)`, and posterior prediction.

mod exact;
mod fitc;
mod hat;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::hatbasis::{domain_from_data, make_knot_grid, KnotGrid};
use crate::kernels::Hyperparams;
use crate::numerics::DenseMatrix;

pub use exact::{exact_nlml, exact_nlml_gradient, exact_predict};
pub use fitc::{fitc_cov, fitc_nlml, fitc_nlml_gradient, fitc_predict};
pub use hat::{hat_nlml_dense, hat_nlml_gradient, hat_nlml_woodbury, hat_predict};

/// Negative variances down to this value are rounded up to zero.
pub const VARIANCE_CLAMP_TOL: f64 = 1e-10;

/// Which model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Exact,
    Fitc,
    Hat,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Exact => "exact",
            ModelKind::Fitc => "fitc",
            ModelKind::Hat => "hat",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ModelKind::Exact),
            "fitc" => Ok(ModelKind::Fitc),
            "hat" => Ok(ModelKind::Hat),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// What to build, before it has seen data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Exact,
    /// Pseudo-inputs are a seeded random subset of the training inputs and are never optimized.
    Fitc { pseudo_count: usize, seed: u64 },
    /// `knots` holds one count per dimension, or a single count used for all of them.
    /// Without explicit `bounds` the grid spans `floor(min)..ceil(max)` of the training inputs.
    Hat {
        knots: Vec<usize>,
        bounds: Option<Vec<(f64, f64)>>,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Exact => ModelKind::Exact,
            ModelSpec::Fitc { .. } => ModelKind::Fitc,
            ModelSpec::Hat { .. } => ModelKind::Hat,
        }
    }

    /// Fixes the data-dependent structure: pseudo-inputs for FITC, the grid for Hat.
    pub fn resolve(&self, data: &Dataset) -> Result<ResolvedSpec> {
        match self {
            ModelSpec::Exact => Ok(ResolvedSpec::Exact),
            ModelSpec::Fitc { pseudo_count, seed } => {
                let n = data.n();
                if *pseudo_count == 0 || *pseudo_count > n {
                    return Err(Error::InvalidSpec(format!(
                        "pseudo count must be in 1..={n} (got {pseudo_count})"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut picked = rand::seq::index::sample(&mut rng, n, *pseudo_count).into_vec();
                picked.sort_unstable();
                let d = data.dim();
                let pseudo = DenseMatrix::from_fn(picked.len(), d, |i, k| data.x[(picked[i], k)]);
                Ok(ResolvedSpec::Fitc { pseudo })
            }
            ModelSpec::Hat { knots, bounds } => {
                let d = data.dim();
                let m = broadcast_knots(knots, d)?;
                let bounds = match bounds {
                    Some(b) => b.clone(),
                    None => domain_from_data(&data.x, true)?,
                };
                Ok(ResolvedSpec::Hat {
                    grid: make_knot_grid(&bounds, &m)?,
                })
            }
        }
    }
}

fn broadcast_knots(knots: &[usize], d: usize) -> Result<Vec<usize>> {
    let m = match knots.len() {
        1 => vec![knots[0]; d],
        len if len == d => knots.to_vec(),
        len => {
            return Err(Error::InvalidSpec(format!(
                "{len} knot counts for {d}-dimensional inputs"
            )))
        }
    };
    if let Some(&bad) = m.iter().find(|&&k| k < 2) {
        return Err(Error::TooFewKnots(bad));
    }
    Ok(m)
}

/// A model spec with its data-dependent structure fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResolvedSpec {
    Exact,
    Fitc { pseudo: DenseMatrix },
    Hat { grid: KnotGrid },
}

impl ResolvedSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ResolvedSpec::Exact => ModelKind::Exact,
            ResolvedSpec::Fitc { .. } => ModelKind::Fitc,
            ResolvedSpec::Hat { .. } => ModelKind::Hat,
        }
    }

    pub fn nlml(&self, data: &Dataset, h: &Hyperparams) -> Result<f64> {
        match self {
            ResolvedSpec::Exact => exact_nlml(data, h),
            ResolvedSpec::Fitc { pseudo } => fitc_nlml(data, pseudo, h),
            ResolvedSpec::Hat { grid } => hat_nlml_woodbury(data, grid, h),
        }
    }

    /// NLML and its gradient over `(log σ_se, log l_k…, log σ, μ_c)`.
    pub fn nlml_gradient(&self, data: &Dataset, h: &Hyperparams) -> Result<(f64, Vec<f64>)> {
        match self {
            ResolvedSpec::Exact => exact_nlml_gradient(data, h),
            ResolvedSpec::Fitc { pseudo } => fitc_nlml_gradient(data, pseudo, h),
            ResolvedSpec::Hat { grid } => hat_nlml_gradient(data, grid, h),
        }
    }
}

/// Free-function form of [`ResolvedSpec::nlml_gradient`].
pub fn nlml_gradient(spec: &ResolvedSpec, data: &Dataset, h: &Hyperparams) -> Result<(f64, Vec<f64>)> {
    spec.nlml_gradient(data, h)
}

pub(crate) fn check_inputs(x: &DenseMatrix, h: &Hyperparams) -> Result<()> {
    if x.cols() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "inputs of dimension {} with {} lengthscales",
            x.cols(),
            h.dim()
        )));
    }
    Ok(())
}

pub(crate) fn half_log_2pi(n: usize) -> f64 {
    0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Options for posterior prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PredictOptions {
    /// Add the observation noise variance to every variance entry.
    pub with_noise: bool,
    /// Also return the full predictive covariance.
    pub full_covariance: bool,
    /// Hat model only: let points outside the grid through with an all-zero basis row
    /// (mean and latent variance collapse to zero) instead of failing.
    pub allow_outside_grid: bool,
}

/// Posterior mean and (co)variance at a set of test inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub covariance: Option<DenseMatrix>,
    pub includes_noise: bool,
    /// Test rows that fell outside a hat grid (only non-empty with `allow_outside_grid`).
    pub outside_rows: Vec<usize>,
}

impl Prediction {
    /// Clamps tiny negative variances to zero, adds noise when requested, and
    /// mirrors the full covariance so it is exactly symmetric.
    pub(crate) fn assemble(
        mean: Vec<f64>,
        mut variance: Vec<f64>,
        mut covariance: Option<DenseMatrix>,
        noise_var: f64,
        opts: PredictOptions,
        outside_rows: Vec<usize>,
    ) -> Result<Self> {
        for (i, v) in variance.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -VARIANCE_CLAMP_TOL {
                    return Err(Error::NegativeVariance { index: i, value: *v });
                }
                *v = 0.0;
            }
        }
        if let Some(cov) = covariance.as_mut() {
            let n = cov.rows();
            for i in 0..n {
                cov[(i, i)] = variance[i];
                for j in (i + 1)..n {
                    let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
            }
        }
        if opts.with_noise {
            for v in variance.iter_mut() {
                *v += noise_var;
            }
            if let Some(cov) = covariance.as_mut() {
                *cov = cov.add_diag(noise_var);
            }
        }
        Ok(Self {
            mean,
            variance,
            covariance,
            includes_noise: opts.with_noise,
            outside_rows,
        })
    }
}

/// Cached factorizations used for prediction.
#[derive(Clone, Debug)]
pub(crate) enum Cache {
    Exact(exact::ExactCache),
    Fitc(fitc::FitcCache),
    Hat(hat::HatCache),
}

/// A model with fixed hyperparameters and prediction caches.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    spec: ModelSpec,
    resolved: ResolvedSpec,
    params: Hyperparams,
    data: Dataset,
    cache: Cache,
}

impl TrainedModel {
    /// Builds the caches for `params`; the result is immutable.
    pub fn new(spec: ModelSpec, resolved: ResolvedSpec, data: Dataset, params: Hyperparams) -> Result<Self> {
        params.validate()?;
        if spec.kind() != resolved.kind() {
            return Err(Error::InvalidSpec(format!(
                "spec kind {} does not match resolved kind {}",
                spec.kind(),
                resolved.kind()
            )));
        }
        check_inputs(&data.x, &params)?;
        let cache = match &resolved {
            ResolvedSpec::Exact => Cache::Exact(exact::ExactCache::build(&data, &params)?),
            ResolvedSpec::Fitc { pseudo } => Cache::Fitc(fitc::FitcCache::build(&data, pseudo, &params)?),
            ResolvedSpec::Hat { grid } => Cache::Hat(hat::HatCache::build(&data, grid, &params)?),
        };
        Ok(Self {
            spec,
            resolved,
            params,
            data,
            cache,
        })
    }

    /// Resolves `spec` against `data` and builds the model at `params` without optimizing.
    pub fn from_params(spec: ModelSpec, data: Dataset, params: Hyperparams) -> Result<Self> {
        let resolved = spec.resolve(&data)?;
        Self::new(spec, resolved, data, params)
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn resolved(&self) -> &ResolvedSpec {
        &self.resolved
    }

    pub fn params(&self) -> &Hyperparams {
        &self.params
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Knot grid of a hat model.
    pub fn grid(&self) -> Option<&KnotGrid> {
        match &self.resolved {
            ResolvedSpec::Hat { grid } => Some(grid),
            _ => None,
        }
    }

    /// Pseudo-inputs of a FITC model.
    pub fn pseudo_inputs(&self) -> Option<&DenseMatrix> {
        match &self.resolved {
            ResolvedSpec::Fitc { pseudo } => Some(pseudo),
            _ => None,
        }
    }

    pub fn nlml(&self) -> Result<f64> {
        self.resolved.nlml(&self.data, &self.params)
    }

    pub fn predict(&self, x_star: &DenseMatrix, opts: PredictOptions) -> Result<Prediction> {
        match self.kind() {
            ModelKind::Exact => exact_predict(self, x_star, opts),
            ModelKind::Fitc => fitc_predict(self, x_star, opts),
            ModelKind::Hat => hat_predict(self, x_star, opts),
        }
    }
}

/// On-disk form of a [`TrainedModel`]: everything needed to rebuild the caches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub spec: ModelSpec,
    pub resolved: ResolvedSpec,
    pub params: Hyperparams,
    pub data: Dataset,
}

impl From<&TrainedModel> for SavedModel {
    fn from(model: &TrainedModel) -> Self {
        Self {
            spec: model.spec.clone(),
            resolved: model.resolved.clone(),
            params: model.params.clone(),
            data: model.data.clone(),
        }
    }
}

impl SavedModel {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad model file: {e}")))
    }

    pub fn into_model(self) -> Result<TrainedModel> {
        TrainedModel::new(self.spec, self.resolved, self.data, self.params)
    }
}
