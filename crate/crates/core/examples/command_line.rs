//! Drives the `hatgp` command line in-process: fit, predict, compare and
//! bench, writing into a temporary directory.
//!
//! ```bash
//! cargo run --release --example command_line
//! ```

use hatgp::cli::main_with_args;

fn run(args: &[&str]) {
    println!("$ hatgp {}", args.join(" "));
    let code = main_with_args(std::iter::once("hatgp").chain(args.iter().copied()));
    println!("exit {code}\n");
}

fn main() -> std::io::Result<()> {
    let dir = std::env::temp_dir().join("hatgp-command-line-example");
    let out = |sub: &str| dir.join(sub).to_string_lossy().into_owned();

    run(&["fit", "--model", "hat", "--m", "6", "--data", "toy2d", "--n", "40", "--out", &out("fit")]);
    run(&["predict", "--model-file", &out("fit/model.json"), "--grid-points", "5", "--out", &out("predict")]);
    run(&["compare", "--model", "hat,fitc,exact", "--m", "6", "--pseudo", "10", "--data", "toy2d", "--n", "40", "--out", &out("compare")]);
    run(&["bench", "--model", "hat,exact", "--ns", "200,400,800", "--reps", "3", "--out", &out("bench")]);
    // configuration errors exit with status 2
    run(&["fit", "--model", "hat", "--m", "1", "--out", &out("bad")]);

    print!("{}", std::fs::read_to_string(dir.join("compare/deltas.csv"))?);
    Ok(())
}
