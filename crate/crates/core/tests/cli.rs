use std::path::Path;
use std::process::{Command, Output};

use hatgp::dataio::read_prediction_csv;

fn hatgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hatgp")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = s(tmp.path());
    let o = hatgp(&["fit", "--model", "hat", "--m", "1", "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("m must be ≥ 2"), "{}", stderr(&o));

    let o = hatgp(&["compare", "--model", "hat", "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("compare needs ≥ 2 models"));

    assert_eq!(code(&hatgp(&["bench", "--reps", "0", "--out", out])), 2);
    assert_eq!(code(&hatgp(&["fit", "--bogus", "--out", out])), 2);
    assert_eq!(code(&hatgp(&["fit", "--model", "nope", "--out", out])), 2);
    assert_eq!(code(&hatgp(&["fit", "--noise", "-1", "--out", out])), 2);
    assert_eq!(code(&hatgp(&["fit", "--n", "0", "--out", out])), 2);
    assert_eq!(code(&hatgp(&["fit", "--bounds", "2:1", "--out", out])), 2);
    assert!(std::fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn data_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hatgp(&["fit", "--data", "snelson:/definitely/missing", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3);
    let o = hatgp(&["fit", "--data", "csv:/definitely/missing.csv", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3);
}

#[test]
fn fit_writes_report_and_model() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fit");
    let o = hatgp(&["fit", "--model", "hat", "--m", "5", "--data", "toy2d", "--n", "20", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["model"], "hat");
    for key in ["amplitude", "lengthscales", "noise_std", "const_mean"] {
        assert!(!report["params"][key].is_null(), "{key}");
    }
    assert!(report["nlml"].is_f64());
    for key in ["iters", "grad_norm", "restarts", "seconds"] {
        assert!(report["fit"].get(key).is_some(), "{key}");
    }
    assert!(report["fit"]["seconds"].is_null());
    assert_eq!(report["config_echo"]["model_args"]["m"][0], 5);
    assert!(out.join("model.json").is_file());
}

#[test]
fn predict_outside_grid_policies() {
    let tmp = tempfile::tempdir().unwrap();
    let fit_dir = tmp.path().join("fit");
    let o = hatgp(&[
        "fit", "--model", "hat", "--m", "4", "--data", "toy2d", "--n", "15", "--bounds", "-1:1,-1:1", "--out", s(&fit_dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let model = fit_dir.join("model.json");
    let points = tmp.path().join("points.csv");
    std::fs::write(&points, "x1,x2\n0.0,0.0\n1.5,0.0\n").unwrap();

    let o = hatgp(&["predict", "--model-file", s(&model), "--test", s(&points), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));
    assert!(!tmp.path().join("predictions.csv").exists());

    let o = hatgp(&[
        "predict", "--model-file", s(&model), "--test", s(&points), "--allow-outside-grid", "--with-noise=false", "--out",
        s(tmp.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let rows = read_prediction_csv(&tmp.path().join("predictions.csv")).unwrap();
    assert!(rows[0].mean.is_finite() && rows[0].variance > 0.0);
    assert_eq!((rows[1].mean, rows[1].variance), (0.0, 0.0));
}

#[test]
fn noise_is_included_by_default() {
    let tmp = tempfile::tempdir().unwrap();
    let fit_dir = tmp.path().join("fit");
    assert_eq!(code(&hatgp(&["fit", "--model", "exact", "--data", "toy2d", "--n", "12", "--out", s(&fit_dir)])), 0);
    let model = fit_dir.join("model.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&hatgp(&["predict", "--model-file", s(&model), "--grid-points", "4", "--out", s(&a)])), 0);
    assert_eq!(
        code(&hatgp(&["predict", "--model-file", s(&model), "--grid-points", "4", "--with-noise=false", "--out", s(&b)])),
        0
    );
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fit_dir.join("report.json")).unwrap()).unwrap();
    let noise_var = report["params"]["noise_std"].as_f64().unwrap().powi(2);
    let noisy = read_prediction_csv(&a.join("predictions.csv")).unwrap();
    let latent = read_prediction_csv(&b.join("predictions.csv")).unwrap();
    assert_eq!(noisy.len(), 16);
    for (n, l) in noisy.iter().zip(&latent) {
        assert!((n.variance - l.variance - noise_var).abs() <= 1e-12 * n.variance.max(1.0));
    }
}

#[test]
fn compare_matches_fit_then_predict() {
    let tmp = tempfile::tempdir().unwrap();
    let cmp = tmp.path().join("cmp");
    let common = ["--data", "toy2d", "--n", "25", "--m", "5", "--pseudo", "8", "--seed", "3"];
    let mut args = vec!["compare", "--model", "hat,fitc,exact", "--grid-points", "6", "--out", s(&cmp)];
    args.extend(common);
    let o = hatgp(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["grid.csv", "hat.csv", "fitc.csv", "exact.csv", "deltas.csv", "summary.json"] {
        assert!(cmp.join(f).is_file(), "{f}");
    }
    let deltas = std::fs::read_to_string(cmp.join("deltas.csv")).unwrap();
    assert!(deltas.starts_with("model_a,model_b,mean_rmse,mean_width_diff\n"));
    assert_eq!(deltas.lines().count(), 4);

    for model in ["hat", "fitc", "exact"] {
        let fit_dir = tmp.path().join(format!("fit_{model}"));
        let mut args = vec!["fit", "--model", model, "--out", s(&fit_dir)];
        args.extend(common);
        assert_eq!(code(&hatgp(&args)), 0);
        let pred_dir = tmp.path().join(format!("pred_{model}"));
        let model_file = fit_dir.join("model.json");
        let grid = cmp.join("grid.csv");
        let o = hatgp(&["predict", "--model-file", s(&model_file), "--test", s(&grid), "--out", s(&pred_dir)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let separate = std::fs::read(pred_dir.join("predictions.csv")).unwrap();
        let together = std::fs::read(cmp.join(format!("{model}.csv"))).unwrap();
        assert_eq!(separate, together, "{model}");
    }
}

#[test]
fn compare_writes_nothing_when_a_model_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cmp = tmp.path().join("cmp");
    // FITC cannot take more pseudo-inputs than training points
    let o = hatgp(&["compare", "--model", "hat,fitc", "--data", "toy2d", "--n", "10", "--pseudo", "36", "--m", "6", "--out", s(&cmp)]);
    assert_eq!(code(&o), 2);
    assert!(!cmp.exists());
}

#[test]
fn csv_data_source() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.csv");
    let rows: String = (0..12).map(|i| format!("{},{}\n", i as f64 * 0.5, (i as f64 * 0.5).sin())).collect();
    std::fs::write(&data, format!("x,target\n{rows}")).unwrap();
    let out = tmp.path().join("o");
    let arg = format!("csv:{}", s(&data));
    let o = hatgp(&["fit", "--model", "hat", "--m", "8", "--data", &arg, "--target", "target", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = hatgp(&["fit", "--data", &arg, "--target", "missing", "--out", s(&out)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bench_writes_timing_and_slopes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hatgp(&["bench", "--model", "hat,fitc", "--ns", "100,200", "--m", "10", "--pseudo", "5", "--reps", "1", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let timing = std::fs::read_to_string(tmp.path().join("timing.csv")).unwrap();
    assert!(timing.starts_with("model,n,m,median_seconds\n"));
    assert_eq!(timing.lines().count(), 5);
    let slopes: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("slopes.json")).unwrap()).unwrap();
    assert_eq!(slopes.as_array().unwrap().len(), 2);
}
