//! Gaussian-process regression with a piecewise-linear (hat) basis.
//!
//! Three models share one interface: an exact GP, FITC with fixed
//! pseudo-inputs, and the hat-basis GP whose likelihood costs `O(n·M²)`
//! through a Woodbury solve.
//!
//! # Examples
//!
//! | example | what it shows |
//! |---|---|
//! | `hat_basis` | knot grids, hat values, sparse design rows, outside-grid rows |
//! | `woodbury_fast_path` | dense vs Woodbury likelihood, same value, different cost |
//! | `fit_1d` | exact / FITC / hat fits on 1D data (`-- <snelson dir>` optional) |
//! | `toy_2d` | 2D regression error against the known function |
//! | `fitc_baseline` | FITC likelihood as pseudo-inputs grow toward n |
//! | `save_and_predict` | JSON round trip, intervals, outside-grid policy |
//! | `scaling_bench` | likelihood time against n, log-log slopes |
//! | `command_line` | the `hatgp` subcommands driven in-process |
//!
//! ```bash
//! cargo run --release --example fit_1d
//! ```

pub mod cli;
pub mod dataio;
pub mod error;
pub mod hatbasis;
pub mod kernels;
pub mod models;
pub mod numerics;
pub mod train;

pub use dataio::Dataset;
pub use error::{Error, ErrorKind, Result};
pub use kernels::Hyperparams;
pub use models::{ModelKind, ModelSpec, PredictOptions, Prediction, SavedModel, TrainedModel};
pub use numerics::DenseMatrix;
pub use train::{fit, FitReport, OptimizerConfig};
