//! Hat-basis regression of `arctan(5x) + sin(1.5y)` from scattered samples.
//!
//! ```bash
//! cargo run --release --example toy_2d
//! ```

use hatgp::cli::{evaluation_grid, rmse};
use hatgp::dataio::{sample_2d_toy, toy_2d_function};
use hatgp::{fit, ModelSpec, OptimizerConfig, PredictOptions};

fn main() -> hatgp::Result<()> {
    let grid = evaluation_grid(&[(-1.0, 1.0), (-1.0, 1.0)], 20)?;
    let truth: Vec<f64> = (0..grid.rows()).map(|i| toy_2d_function(grid[(i, 0)], grid[(i, 1)])).collect();

    for n in [10, 50, 200] {
        let data = sample_2d_toy(n, 7, 0.0, [(-1.0, 1.0); 2])?;
        for m in [6, 10] {
            let spec = ModelSpec::Hat { knots: vec![m, m], bounds: None };
            let (model, _) = fit(&spec, &data, &OptimizerConfig::default())?;
            let pred = model.predict(&grid, PredictOptions::default())?;
            println!("n = {n:>3}, {m}×{m} knots: rmse vs truth {:.4}", rmse(&pred.mean, &truth));
        }
    }
    Ok(())
}
