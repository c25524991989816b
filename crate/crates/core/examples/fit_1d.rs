//! Fit all three models to 1D data and compare the hat and FITC means with
//! the exact GP on an evaluation grid.
//!
//! Pass a directory holding the Snelson `train_inputs` / `train_outputs`
//! files to use them; otherwise a synthetic 200-point set is used.
//!
//! ```bash
//! cargo run --release --example fit_1d -- path/to/snelson
//! ```

use hatgp::cli::{evaluation_grid, rmse};
use hatgp::dataio::{load_snelson_dir, sample_1d_synthetic};
use hatgp::hatbasis::domain_from_data;
use hatgp::{fit, ModelSpec, OptimizerConfig, PredictOptions};

fn main() -> hatgp::Result<()> {
    let data = match std::env::args().nth(1) {
        Some(dir) => load_snelson_dir(dir.as_ref())?,
        None => sample_1d_synthetic(200, 6, 0.3)?,
    };
    println!("{}: n = {}, std(y) = {:.4}", data.name, data.n(), data.y_std());

    let grid = evaluation_grid(&domain_from_data(&data.x, true)?, 200)?;
    let cfg = OptimizerConfig::default();
    let (exact, _) = fit(&ModelSpec::Exact, &data, &cfg)?;
    let reference = exact.predict(&grid, PredictOptions::default())?;

    let specs = [
        ("exact", ModelSpec::Exact),
        ("fitc, 10 pseudo-inputs", ModelSpec::Fitc { pseudo_count: 10, seed: 0 }),
        ("hat, m = 20", ModelSpec::Hat { knots: vec![20], bounds: None }),
        ("hat, m = 40", ModelSpec::Hat { knots: vec![40], bounds: None }),
    ];
    for (label, spec) in specs {
        let (model, report) = fit(&spec, &data, &cfg)?;
        let pred = model.predict(&grid, PredictOptions { with_noise: true, ..PredictOptions::default() })?;
        let h = model.params();
        println!(
            "{label:<24} nlml {:>10.4}  σ_se {:.3}  l {:.3}  σ {:.4}  rmse vs exact {:.4}",
            report.final_nlml,
            h.amplitude,
            h.lengthscales[0],
            h.noise_std,
            rmse(&pred.mean, &reference.mean)
        );
    }
    Ok(())
}
