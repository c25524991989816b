//! FITC with a growing number of (fixed, randomly chosen) pseudo-inputs.
//! With every training input as a pseudo-input it is the exact GP.
//!
//! ```bash
//! cargo run --release --example fitc_baseline
//! ```

use hatgp::dataio::sample_1d_synthetic;
use hatgp::{Hyperparams, ModelSpec, TrainedModel};

fn main() -> hatgp::Result<()> {
    let data = sample_1d_synthetic(60, 3, 0.2)?;
    let h = Hyperparams::new(1.0, vec![1.0], 0.2, 0.0)?;
    let exact = TrainedModel::from_params(ModelSpec::Exact, data.clone(), h.clone())?.nlml()?;
    println!("exact nlml {exact:.8}");
    for p in [2, 5, 10, 20, 60] {
        let spec = ModelSpec::Fitc { pseudo_count: p, seed: 0 };
        let model = TrainedModel::from_params(spec, data.clone(), h.clone())?;
        println!("fitc p = {p:>2}: nlml {:.8}", model.nlml()?);
    }
    Ok(())
}
