//! NLML evaluation time against n for the three models, with log-log slopes.
//!
//! ```bash
//! cargo run --release --example scaling_bench
//! ```

use hatgp::cli::{bench_nlml, loglog_slope};
use hatgp::ModelKind;

fn main() -> hatgp::Result<()> {
    let runs = [
        (ModelKind::Hat, vec![500, 1000, 2000, 4000, 8000]),
        (ModelKind::Fitc, vec![500, 1000, 2000, 4000]),
        (ModelKind::Exact, vec![250, 500, 1000]),
    ];
    for (kind, ns) in runs {
        let mut secs = Vec::new();
        for &n in &ns {
            let row = bench_nlml(kind, n, 20, 20, 5, 0, 0.1)?;
            println!("{kind:>5} n = {n:>5}: {:.3e} s", row.median_seconds);
            secs.push(row.median_seconds);
        }
        println!("{kind:>5} slope {:.2}\n", loglog_slope(&ns, &secs));
    }
    Ok(())
}
