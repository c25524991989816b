//! Train, save to JSON, reload, and predict with confidence intervals.
//!
//! ```bash
//! cargo run --example save_and_predict
//! ```

use hatgp::dataio::{prediction_csv, sample_2d_toy};
use hatgp::{fit, DenseMatrix, ModelSpec, OptimizerConfig, PredictOptions, SavedModel};

fn main() -> hatgp::Result<()> {
    let data = sample_2d_toy(40, 1, 0.05, [(-1.0, 1.0); 2])?;
    let spec = ModelSpec::Hat { knots: vec![6], bounds: None };
    let (model, report) = fit(&spec, &data, &OptimizerConfig::default())?;
    println!("trained: nlml {:.4} ({:?} after {} iterations)", report.final_nlml, report.termination, report.iterations);

    let json = SavedModel::from(&model).to_json();
    let reloaded = SavedModel::from_json(&json)?.into_model()?;
    assert_eq!(reloaded.params(), model.params());

    let x_star = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![0.5, -0.5], vec![1.2, 0.0]])?;
    // the last point is outside the knot grid: strict mode refuses it…
    match reloaded.predict(&x_star, PredictOptions::default()) {
        Err(e) => println!("strict: {e}"),
        Ok(_) => unreachable!(),
    }
    // …and the opt-in mode gives it an empty basis row
    let opts = PredictOptions { with_noise: true, allow_outside_grid: true, ..PredictOptions::default() };
    let pred = reloaded.predict(&x_star, opts)?;
    print!("{}", prediction_csv(&pred, &x_star)?);
    Ok(())
}
