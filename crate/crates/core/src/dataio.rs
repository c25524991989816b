//! Dataset loading, synthetic data, and result serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Prediction;
use crate::numerics::DenseMatrix;

/// Multiplier of the symmetric 95% normal interval.
pub const CI_MULTIPLIER: f64 = 1.96;

/// Where a dataset came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Files(Vec<PathBuf>),
    Synthetic(String),
    InMemory,
}

/// Training inputs (`n×d`) with their targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub name: String,
    pub source: DataSource,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: Vec<f64>, name: impl Into<String>, source: DataSource) -> Result<Self> {
        if y.is_empty() || x.rows() == 0 {
            return Err(Error::EmptyData);
        }
        if x.rows() != y.len() {
            return Err(Error::LengthMismatch {
                inputs: x.rows(),
                outputs: y.len(),
            });
        }
        if x.as_slice().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self {
            x,
            y,
            name: name.into(),
            source,
        })
    }

    pub fn in_memory(x: DenseMatrix, y: Vec<f64>) -> Result<Self> {
        Self::new(x, y, "in-memory", DataSource::InMemory)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// First `count` rows.
    pub fn head(&self, count: usize) -> Result<Self> {
        let count = count.min(self.n());
        let d = self.dim();
        let x = DenseMatrix::new(count, d, self.x.as_slice()[..count * d].to_vec())?;
        Self::new(x, self.y[..count].to_vec(), self.name.clone(), self.source.clone())
    }

    pub fn y_mean(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.n() as f64
    }

    /// Population standard deviation of the targets.
    pub fn y_std(&self) -> f64 {
        let mean = self.y_mean();
        (self.y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.n() as f64).sqrt()
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::FileUnreadable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_token(token: &str, line: usize) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericToken {
            line,
            token: token.to_string(),
        }),
    }
}

/// One number per non-blank line; line numbers in errors are 1-based.
fn read_column(path: &Path) -> Result<Vec<f64>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        let Some(tok) = tokens.next() else { continue };
        if let Some(extra) = tokens.next() {
            return Err(Error::NonNumericToken {
                line: i + 1,
                token: extra.to_string(),
            });
        }
        out.push(parse_token(tok, i + 1)?);
    }
    Ok(out)
}

/// Reads the two-file Snelson format: one input per line, one output per line.
pub fn load_snelson(inputs_path: &Path, outputs_path: &Path) -> Result<Dataset> {
    let x = read_column(inputs_path)?;
    let y = read_column(outputs_path)?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            inputs: x.len(),
            outputs: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyFile(inputs_path.to_path_buf()));
    }
    Dataset::new(
        DenseMatrix::column(&x),
        y,
        "snelson",
        DataSource::Files(vec![inputs_path.to_path_buf(), outputs_path.to_path_buf()]),
    )
}

/// Loads `train_inputs` and `train_outputs` from a directory.
pub fn load_snelson_dir(dir: &Path) -> Result<Dataset> {
    load_snelson(&dir.join("train_inputs"), &dir.join("train_outputs"))
}

/// Header plus numeric rows of a comma-separated file.
fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::FileUnreadable {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| Error::FileUnreadable {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let row = record
            .iter()
            .map(|tok| parse_token(tok, line))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((headers, rows))
}

/// Reads a headed CSV; every column except `target_column` becomes an input.
pub fn load_csv(path: &Path, target_column: &str) -> Result<Dataset> {
    let (headers, rows) = read_csv(path)?;
    let target = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let d = headers.len() - 1;
    if d == 0 {
        return Err(Error::MissingColumn("input".into()));
    }
    let mut x = Vec::with_capacity(rows.len() * d);
    let mut y = Vec::with_capacity(rows.len());
    for row in &rows {
        for (j, &v) in row.iter().enumerate() {
            if j == target {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Dataset::new(
        DenseMatrix::new(rows.len(), d, x)?,
        y,
        name,
        DataSource::Files(vec![path.to_path_buf()]),
    )
}

/// Reads a headed CSV of input points (all columns are inputs).
pub fn load_points_csv(path: &Path) -> Result<DenseMatrix> {
    let (headers, rows) = read_csv(path)?;
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let d = headers.len();
    DenseMatrix::new(rows.len(), d, rows.concat())
}

/// `arctan(5x) + sin(1.5y)`.
pub fn toy_2d_function(x: f64, y: f64) -> f64 {
    (5.0 * x).atan() + (1.5 * y).sin()
}

/// Uniform samples in `bounds` of [`toy_2d_function`] plus Gaussian noise.
pub fn sample_2d_toy(n: usize, seed: u64, noise_std: f64, bounds: [(f64, f64); 2]) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("n must be ≥ 1".into()));
    }
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::Config(format!("noise must be >= 0 (got {noise_std})")));
    }
    for &(lb, ub) in &bounds {
        if !(lb.is_finite() && ub.is_finite() && lb < ub) {
            return Err(Error::BadBox(format!("[{lb}, {ub}]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a = rng.random_range(bounds[0].0..bounds[0].1);
        let b = rng.random_range(bounds[1].0..bounds[1].1);
        let eps: f64 = normal.sample(&mut rng);
        x.push(a);
        x.push(b);
        y.push(toy_2d_function(a, b) + noise_std * eps);
    }
    Dataset::new(
        DenseMatrix::new(n, 2, x)?,
        y,
        "toy2d",
        DataSource::Synthetic(format!("arctan(5x)+sin(1.5y), n={n}, seed={seed}, noise={noise_std}")),
    )
}

/// `sin(x) + 0.3·sin(3x)` sampled uniformly on `[0, 10]` with noise; used by the benchmarks.
pub fn sample_1d_synthetic(n: usize, seed: u64, noise_std: f64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("n must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.random_range(0.0..10.0);
        let eps: f64 = normal.sample(&mut rng);
        x.push(a);
        y.push(a.sin() + 0.3 * (3.0 * a).sin() + noise_std * eps);
    }
    Dataset::new(
        DenseMatrix::column(&x),
        y,
        "synthetic1d",
        DataSource::Synthetic(format!("sin(x)+0.3sin(3x), n={n}, seed={seed}, noise={noise_std}")),
    )
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// `mean ± 1.96·sqrt(variance)`.
pub fn confidence_interval(mean: f64, variance: f64) -> (f64, f64) {
    let half = CI_MULTIPLIER * variance.max(0.0).sqrt();
    (mean - half, mean + half)
}

/// Renders the prediction table: input columns, mean, variance, ci_lo, ci_hi.
pub fn prediction_csv(pred: &Prediction, x: &DenseMatrix) -> Result<String> {
    if x.rows() != pred.mean.len() || pred.variance.len() != pred.mean.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points for {} predictions",
            x.rows(),
            pred.mean.len()
        )));
    }
    let mut out = String::new();
    for k in 0..x.cols() {
        let _ = write!(out, "x{},", k + 1);
    }
    out.push_str("mean,variance,ci_lo,ci_hi\n");
    for i in 0..x.rows() {
        for &v in x.row(i) {
            out.push_str(&fmt_f64(v));
            out.push(',');
        }
        let (lo, hi) = confidence_interval(pred.mean[i], pred.variance[i]);
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(pred.mean[i]),
            fmt_f64(pred.variance[i]),
            fmt_f64(lo),
            fmt_f64(hi)
        );
    }
    Ok(out)
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::FileUnwritable {
            path: parent.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    fs::write(path, contents).map_err(|e| Error::FileUnwritable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_prediction_csv(pred: &Prediction, x: &DenseMatrix, path: &Path) -> Result<()> {
    write_text(path, &prediction_csv(pred, x)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_report_json<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::FileUnwritable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_text(path, &text)
}

/// Parsed row of a prediction CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub inputs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Reads back a file written by [`write_prediction_csv`].
pub fn read_prediction_csv(path: &Path) -> Result<Vec<PredictionRow>> {
    let (headers, rows) = read_csv(path)?;
    if headers.len() < 5 {
        return Err(Error::MissingColumn("mean".into()));
    }
    let d = headers.len() - 4;
    Ok(rows
        .into_iter()
        .map(|r| PredictionRow {
            inputs: r[..d].to_vec(),
            mean: r[d],
            variance: r[d + 1],
            ci_lo: r[d + 2],
            ci_hi: r[d + 3],
        })
        .collect())
}
