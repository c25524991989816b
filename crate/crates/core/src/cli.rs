//! The `hatgp` command line: `fit`, `predict`, `compare` and `bench`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure. Every command is deterministic given its flags (bench timings
//! aside).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataio::{
    self, confidence_interval, fmt_f64, load_csv, load_points_csv, load_snelson_dir, prediction_csv,
    sample_1d_synthetic, sample_2d_toy, write_report_json, write_text, Dataset,
};
use crate::error::{Error, ErrorKind, Result};
use crate::hatbasis::domain_from_data;
use crate::kernels::Hyperparams;
use crate::models::{ModelKind, ModelSpec, PredictOptions, Prediction, SavedModel, TrainedModel};
use crate::numerics::DenseMatrix;
use crate::train::{fit, initial_params, FitReport, OptimizerConfig, Termination};

#[derive(Parser, Debug)]
#[command(name = "hatgp", version, about = "Hat-basis, FITC and exact Gaussian-process regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one model; writes report.json and model.json.
    Fit(FitArgs),
    /// Predict with a saved model; writes predictions.csv.
    Predict(PredictArgs),
    /// Train several models on the same data and compare them on a shared grid.
    Compare(CompareArgs),
    /// Time NLML evaluation against the training-set size.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    /// snelson:<dir> | csv:<path> | toy2d | synth1d
    #[arg(long, default_value = "toy2d")]
    pub data: String,
    /// Target column for csv data.
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Sample count for synthetic data; a prefix length for file data.
    #[arg(long)]
    pub n: Option<usize>,
    /// Noise standard deviation for synthetic data.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// Knots per dimension (one value is used for every dimension).
    #[arg(long, value_delimiter = ',', default_value = "20")]
    pub m: Vec<usize>,
    /// FITC pseudo-input count.
    #[arg(long, default_value_t = 10)]
    pub pseudo: usize,
    /// Knot-grid box, `lo:hi[,lo:hi]`; defaults to the integer hull of the data.
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct NoiseFlag {
    /// Include observation noise in variances and intervals (`--with-noise=false` for latent).
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = ArgAction::Set)]
    pub with_noise: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    #[arg(long, default_value = "hat")]
    pub model: String,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Store wall-clock seconds in the report (makes it non-reproducible byte-wise).
    #[arg(long)]
    pub record_time: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    /// Headed CSV of test inputs; without it an evaluation grid is used.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Evaluation grid points per dimension (default 200 in 1D, 20 otherwise).
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[command(flatten)]
    pub noise: NoiseFlag,
    /// Give out-of-grid test points an empty basis row instead of failing.
    #[arg(long)]
    pub allow_outside_grid: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CompareArgs {
    /// Comma-separated models, e.g. `hat,fitc,exact`.
    #[arg(long, value_delimiter = ',', default_value = "hat,fitc,exact")]
    pub model: Vec<String>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[command(flatten)]
    pub noise: NoiseFlag,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "hat,exact")]
    pub model: Vec<String>,
    /// Training-set sizes.
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "20")]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub pseudo: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Parses `args` (program name first) and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

// ---------- flag parsing ----------

/// Parses `lo:hi[,lo:hi…]`.
pub fn parse_bounds(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("bounds entry {part:?} is not lo:hi")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Config(format!("bad bound {t:?}")))
            };
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo >= hi {
                return Err(Error::BadBounds { lb: lo, ub: hi });
            }
            Ok((lo, hi))
        })
        .collect()
}

pub fn load_data(args: &DataArgs) -> Result<Dataset> {
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(Error::Config(format!("noise must be ≥ 0 (got {})", args.noise)));
    }
    if args.n == Some(0) {
        return Err(Error::Config("n must be ≥ 1".into()));
    }
    let data = if let Some(dir) = args.data.strip_prefix("snelson:") {
        load_snelson_dir(Path::new(dir))?
    } else if let Some(path) = args.data.strip_prefix("csv:") {
        load_csv(Path::new(path), &args.target)?
    } else {
        match args.data.as_str() {
            "toy2d" => return sample_2d_toy(args.n.unwrap_or(10), 0, args.noise, [(-1.0, 1.0); 2]),
            "synth1d" => return sample_1d_synthetic(args.n.unwrap_or(200), 0, args.noise),
            other => {
                return Err(Error::Config(format!(
                    "unknown data source {other:?} (expected snelson:<dir>, csv:<path>, toy2d or synth1d)"
                )))
            }
        }
    };
    match args.n {
        Some(n) if n > data.n() => Err(Error::Config(format!("n = {n} exceeds the {} available rows", data.n()))),
        Some(n) => data.head(n),
        None => Ok(data),
    }
}

pub fn model_spec(kind: ModelKind, args: &ModelArgs) -> Result<ModelSpec> {
    Ok(match kind {
        ModelKind::Exact => ModelSpec::Exact,
        ModelKind::Fitc => {
            if args.pseudo == 0 {
                return Err(Error::Config("pseudo must be ≥ 1".into()));
            }
            ModelSpec::Fitc {
                pseudo_count: args.pseudo,
                seed: args.seed,
            }
        }
        ModelKind::Hat => {
            if let Some(&bad) = args.m.iter().find(|&&k| k < 2) {
                return Err(Error::TooFewKnots(bad));
            }
            ModelSpec::Hat {
                knots: args.m.clone(),
                bounds: args.bounds.as_deref().map(parse_bounds).transpose()?,
            }
        }
    })
}

fn optimizer_config(train: &TrainArgs, seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        max_iters: train.max_iters,
        restarts: train.restarts,
        seed,
        ..OptimizerConfig::default()
    }
}

fn echo<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("flags serialize")
}

// ---------- evaluation grids ----------

/// Tensor grid with `points` equally spaced values per dimension; the first
/// dimension varies fastest.
pub fn evaluation_grid(bounds: &[(f64, f64)], points: usize) -> Result<DenseMatrix> {
    if points < 2 {
        return Err(Error::Config(format!("grid-points must be ≥ 2 (got {points})")));
    }
    let d = bounds.len();
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            (0..points)
                .map(|i| {
                    if i + 1 == points {
                        hi
                    } else {
                        lo + i as f64 * (hi - lo) / (points - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let total = points.pow(d as u32);
    Ok(DenseMatrix::from_fn(total, d, |row, k| {
        axes[k][(row / points.pow(k as u32)) % points]
    }))
}

fn default_grid_points(d: usize) -> usize {
    if d == 1 {
        200
    } else {
        20
    }
}

/// The hat grid's box if there is one, otherwise the integer hull of the training inputs.
fn model_domain(model: &TrainedModel) -> Result<Vec<(f64, f64)>> {
    match model.grid() {
        Some(grid) => Ok(grid.bounds()),
        None => domain_from_data(&model.data().x, true),
    }
}

fn points_csv(x: &DenseMatrix) -> String {
    let mut out = (1..=x.cols()).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for i in 0..x.rows() {
        out.push_str(&x.row(i).iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

// ---------- fit ----------

#[derive(Serialize)]
struct FitSection {
    iters: usize,
    grad_norm: f64,
    restarts: usize,
    seconds: Option<f64>,
    termination: Termination,
    winner_restart: usize,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    model: &'static str,
    params: &'a Hyperparams,
    nlml: f64,
    fit: FitSection,
    config_echo: serde_json::Value,
}

fn fit_section(report: &FitReport, record_time: bool) -> FitSection {
    FitSection {
        iters: report.iterations,
        grad_norm: report.grad_norm,
        restarts: report.restarts.len(),
        seconds: record_time.then_some(report.wall_time_secs),
        termination: report.termination,
        winner_restart: report.winner_restart,
    }
}

/// Trains one model as `fit` and `compare` do.
pub fn train_one(kind: ModelKind, data: &Dataset, model_args: &ModelArgs, train: &TrainArgs) -> Result<(TrainedModel, FitReport)> {
    let spec = model_spec(kind, model_args)?;
    fit(&spec, data, &optimizer_config(train, model_args.seed))
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let kind: ModelKind = args.model.parse()?;
    let spec = model_spec(kind, &args.model_args)?;
    let cfg = optimizer_config(&args.train, args.model_args.seed);
    cfg.validate()?;
    let data = load_data(&args.data)?;
    let (model, report) = fit(&spec, &data, &cfg)?;
    let out = FitOutput {
        model: kind.name(),
        params: model.params(),
        nlml: report.final_nlml,
        fit: fit_section(&report, args.record_time),
        config_echo: echo(args),
    };
    write_report_json(&out, &args.out.join("report.json"))?;
    write_text(&args.out.join("model.json"), &SavedModel::from(&model).to_json())?;
    eprintln!(
        "{}: nlml {} after {} iterations ({:.3} s)",
        kind,
        fmt_f64(report.final_nlml),
        report.iterations,
        report.wall_time_secs
    );
    Ok(())
}

// ---------- predict ----------

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::FileUnreadable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    SavedModel::from_json(&text)?.into_model()
}

fn warn_outside(pred: &Prediction) {
    if !pred.outside_rows.is_empty() {
        eprintln!(
            "warning: {} test point(s) outside the knot grid (first row {}); their mean and latent variance collapse to 0",
            pred.outside_rows.len(),
            pred.outside_rows[0]
        );
    }
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let model = load_model(&args.model_file)?;
    let x_star = match &args.test {
        Some(path) => load_points_csv(path)?,
        None => {
            let domain = model_domain(&model)?;
            let points = args.grid_points.unwrap_or(default_grid_points(domain.len()));
            evaluation_grid(&domain, points)?
        }
    };
    let opts = PredictOptions {
        with_noise: args.noise.with_noise,
        full_covariance: false,
        allow_outside_grid: args.allow_outside_grid,
    };
    let pred = model.predict(&x_star, opts)?;
    warn_outside(&pred);
    write_text(&args.out.join("predictions.csv"), &prediction_csv(&pred, &x_star)?)
}

// ---------- compare ----------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Delta {
    pub model_a: String,
    pub model_b: String,
    /// RMSE between the two predictive means.
    pub mean_rmse: f64,
    /// Mean of `width_a − width_b` of the 95% intervals.
    pub mean_width_diff: f64,
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    model: &'static str,
    nlml: f64,
    params: &'a Hyperparams,
    fit: FitSection,
    mean_interval_width: f64,
    mean_latent_interval_width: f64,
    mean_noisy_interval_width: f64,
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    data: &'a str,
    n_train: usize,
    grid_rows: usize,
    with_noise: bool,
    models: Vec<ModelSummary<'a>>,
    deltas: &'a [Delta],
    config_echo: serde_json::Value,
}

fn interval_widths(pred: &Prediction) -> Vec<f64> {
    pred.mean
        .iter()
        .zip(&pred.variance)
        .map(|(&m, &v)| {
            let (lo, hi) = confidence_interval(m, v);
            hi - lo
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Pairwise mean RMSE and interval-width differences, in the order given.
pub fn pairwise_deltas(names: &[&str], preds: &[Prediction]) -> Vec<Delta> {
    let widths: Vec<Vec<f64>> = preds.iter().map(interval_widths).collect();
    let mut out = Vec::new();
    for a in 0..preds.len() {
        for b in (a + 1)..preds.len() {
            let diff: Vec<f64> = widths[a].iter().zip(&widths[b]).map(|(x, y)| x - y).collect();
            out.push(Delta {
                model_a: names[a].to_string(),
                model_b: names[b].to_string(),
                mean_rmse: rmse(&preds[a].mean, &preds[b].mean),
                mean_width_diff: mean(&diff),
            });
        }
    }
    out
}

pub fn deltas_csv(deltas: &[Delta]) -> String {
    let mut out = String::from("model_a,model_b,mean_rmse,mean_width_diff\n");
    for d in deltas {
        out.push_str(&format!(
            "{},{},{},{}\n",
            d.model_a,
            d.model_b,
            fmt_f64(d.mean_rmse),
            fmt_f64(d.mean_width_diff)
        ));
    }
    out
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let kinds = args
        .model
        .iter()
        .map(|s| s.parse::<ModelKind>())
        .collect::<Result<Vec<_>>>()?;
    if kinds.len() < 2 {
        return Err(Error::Config("compare needs ≥ 2 models".into()));
    }
    for (i, k) in kinds.iter().enumerate() {
        if kinds[..i].contains(k) {
            return Err(Error::Config(format!("model {k} listed twice")));
        }
    }
    let specs = kinds
        .iter()
        .map(|&k| model_spec(k, &args.model_args))
        .collect::<Result<Vec<_>>>()?;
    let cfg = optimizer_config(&args.train, args.model_args.seed);
    cfg.validate()?;
    let data = load_data(&args.data)?;
    let domain = match &args.model_args.bounds {
        Some(b) => parse_bounds(b)?,
        None => domain_from_data(&data.x, true)?,
    };
    let points = args.grid_points.unwrap_or(default_grid_points(data.dim()));
    let grid = evaluation_grid(&domain, points)?;
    let opts = PredictOptions {
        with_noise: args.noise.with_noise,
        ..PredictOptions::default()
    };

    // everything is computed before anything is written
    let mut files: Vec<(PathBuf, String)> = vec![(args.out.join("grid.csv"), points_csv(&grid))];
    let mut fitted = Vec::new();
    for (&kind, spec) in kinds.iter().zip(&specs) {
        let (trained, report) = fit(spec, &data, &cfg)?;
        // predict through the saved form so results match `fit` followed by `predict`
        let saved = SavedModel::from(&trained).to_json();
        let model = SavedModel::from_json(&saved)?.into_model()?;
        let pred = model.predict(&grid, opts)?;
        let latent = model.predict(&grid, PredictOptions::default())?;
        let noisy = model.predict(
            &grid,
            PredictOptions {
                with_noise: true,
                ..PredictOptions::default()
            },
        )?;
        files.push((args.out.join("models").join(format!("{kind}.json")), saved));
        files.push((args.out.join(format!("{kind}.csv")), prediction_csv(&pred, &grid)?));
        fitted.push((kind, model, report, pred, latent, noisy));
    }
    let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
    let preds: Vec<Prediction> = fitted.iter().map(|f| f.3.clone()).collect();
    let deltas = pairwise_deltas(&names, &preds);
    files.push((args.out.join("deltas.csv"), deltas_csv(&deltas)));
    let summary = CompareSummary {
        data: &data.name,
        n_train: data.n(),
        grid_rows: grid.rows(),
        with_noise: opts.with_noise,
        models: fitted
            .iter()
            .map(|(kind, model, report, pred, latent, noisy)| ModelSummary {
                model: kind.name(),
                nlml: report.final_nlml,
                params: model.params(),
                fit: fit_section(report, false),
                mean_interval_width: mean(&interval_widths(pred)),
                mean_latent_interval_width: mean(&interval_widths(latent)),
                mean_noisy_interval_width: mean(&interval_widths(noisy)),
            })
            .collect(),
        deltas: &deltas,
        config_echo: echo(args),
    };
    let mut summary_text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    summary_text.push('\n');
    files.push((args.out.join("summary.json"), summary_text));

    for (path, text) in &files {
        write_text(path, text)?;
    }
    for d in &deltas {
        eprintln!(
            "{} vs {}: mean rmse {:.6}, width diff {:.6}",
            d.model_a, d.model_b, d.mean_rmse, d.mean_width_diff
        );
    }
    Ok(())
}

// ---------- bench ----------

/// One benchmark cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub model: ModelKind,
    pub n: usize,
    /// Knots per dimension for hat, pseudo-inputs for FITC, 0 for exact.
    pub m: usize,
    pub median_seconds: f64,
    pub nlml: f64,
}

/// Median over `reps` of the per-call time of `f`; each repetition loops until 5 ms have passed.
pub fn median_call_seconds<F: FnMut() -> Result<f64>>(reps: usize, mut f: F) -> Result<f64> {
    if reps == 0 {
        return Err(Error::Config("reps must be ≥ 1".into()));
    }
    const MIN_BATCH: f64 = 5e-3;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let mut calls = 0u32;
        loop {
            std::hint::black_box(f()?);
            calls += 1;
            if start.elapsed().as_secs_f64() >= MIN_BATCH {
                break;
            }
        }
        times.push(start.elapsed().as_secs_f64() / calls as f64);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    })
}

/// Least-squares slope of `log t` against `log n`.
pub fn loglog_slope(ns: &[usize], seconds: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = seconds.iter().map(|t| t.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Times one NLML evaluation of `kind` on `n` synthetic 1D points, at the
/// heuristic initial hyperparameters.
pub fn bench_nlml(kind: ModelKind, n: usize, m: usize, pseudo: usize, reps: usize, seed: u64, noise: f64) -> Result<BenchRow> {
    let data = sample_1d_synthetic(n, seed, noise)?;
    let spec = match kind {
        ModelKind::Exact => ModelSpec::Exact,
        ModelKind::Fitc => ModelSpec::Fitc {
            pseudo_count: pseudo,
            seed,
        },
        ModelKind::Hat => ModelSpec::Hat {
            knots: vec![m],
            bounds: None,
        },
    };
    let resolved = spec.resolve(&data)?;
    let h = initial_params(&data)?;
    let nlml = resolved.nlml(&data, &h)?;
    let median_seconds = median_call_seconds(reps, || resolved.nlml(&data, &h))?;
    Ok(BenchRow {
        model: kind,
        n,
        m: match kind {
            ModelKind::Exact => 0,
            ModelKind::Fitc => pseudo,
            ModelKind::Hat => m,
        },
        median_seconds,
        nlml,
    })
}

#[derive(Serialize)]
struct SlopeRow {
    model: ModelKind,
    m: usize,
    ns: Vec<usize>,
    slope: f64,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(Error::Config("reps must be ≥ 1".into()));
    }
    if args.ns.is_empty() || args.ns.contains(&0) {
        return Err(Error::Config("ns must be a list of sizes ≥ 1".into()));
    }
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(Error::Config(format!("noise must be ≥ 0 (got {})", args.noise)));
    }
    let m = match args.m.as_slice() {
        [m] => *m,
        _ => return Err(Error::Config("bench takes a single --m".into())),
    };
    let kinds = args
        .model
        .iter()
        .map(|s| s.parse::<ModelKind>())
        .collect::<Result<Vec<_>>>()?;
    if kinds.contains(&ModelKind::Hat) && m < 2 {
        return Err(Error::TooFewKnots(m));
    }
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for &kind in &kinds {
        let start = rows.len();
        for &n in &args.ns {
            let row = bench_nlml(kind, n, m, args.pseudo, args.reps, args.seed, args.noise)?;
            eprintln!("{kind} n={n}: {:.3e} s", row.median_seconds);
            rows.push(row);
        }
        let ours = &rows[start..];
        let secs: Vec<f64> = ours.iter().map(|r| r.median_seconds).collect();
        slopes.push(SlopeRow {
            model: kind,
            m: ours[0].m,
            ns: args.ns.clone(),
            slope: if args.ns.len() >= 2 { loglog_slope(&args.ns, &secs) } else { f64::NAN },
        });
    }

    let mut timing = String::from("model,n,m,median_seconds\n");
    let mut nlml = String::from("model,n,m,nlml\n");
    for r in &rows {
        timing.push_str(&format!("{},{},{},{}\n", r.model, r.n, r.m, fmt_f64(r.median_seconds)));
        nlml.push_str(&format!("{},{},{},{}\n", r.model, r.n, r.m, fmt_f64(r.nlml)));
    }
    write_text(&args.out.join("timing.csv"), &timing)?;
    write_text(&args.out.join("nlml.csv"), &nlml)?;
    dataio::write_report_json(&slopes, &args.out.join("slopes.json"))?;
    for s in &slopes {
        eprintln!("{} slope {:.3}", s.model, s.slope);
    }
    Ok(())
}
