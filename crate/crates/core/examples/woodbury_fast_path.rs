//! The hat model's likelihood two ways: through the explicit n×n covariance
//! and through the M×M Woodbury solve. Same number, very different cost.
//!
//! ```bash
//! cargo run --release --example woodbury_fast_path
//! ```

use std::time::Instant;

use hatgp::dataio::sample_1d_synthetic;
use hatgp::hatbasis::make_knot_grid;
use hatgp::models::{hat_nlml_dense, hat_nlml_woodbury};
use hatgp::Hyperparams;

fn main() -> hatgp::Result<()> {
    let h = Hyperparams::new(1.0, vec![0.8], 0.1, 0.0)?;
    let grid = make_knot_grid(&[(0.0, 10.0)], &[20])?;
    println!("{:>6} {:>22} {:>22} {:>10} {:>10}", "n", "dense nlml", "woodbury nlml", "dense s", "fast s");
    for n in [100, 400, 1600] {
        let data = sample_1d_synthetic(n, 1, 0.1)?;
        let t = Instant::now();
        let dense = hat_nlml_dense(&data, &grid, &h)?;
        let t_dense = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let fast = hat_nlml_woodbury(&data, &grid, &h)?;
        let t_fast = t.elapsed().as_secs_f64();
        println!("{n:>6} {dense:>22.12} {fast:>22.12} {t_dense:>10.4} {t_fast:>10.6}");
    }
    Ok(())
}
