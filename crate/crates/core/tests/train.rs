use hatgp::dataio::{sample_1d_synthetic, Dataset};
use hatgp::models::ModelSpec;
use hatgp::train::{fit, optimize_with, Termination};
use hatgp::{Error, Hyperparams, OptimizerConfig};

fn data30() -> Dataset {
    sample_1d_synthetic(30, 4, 0.2).unwrap()
}

#[test]
fn exact_fit_converges_and_never_worsens() {
    let data = data30();
    let (model, report) = fit(&ModelSpec::Exact, &data, &OptimizerConfig::default()).unwrap();
    assert_eq!(report.termination, Termination::Converged);
    assert!(report.grad_norm <= 1e-4, "{}", report.grad_norm);
    let best = report.restarts.iter().filter_map(|r| r.final_nlml).fold(f64::INFINITY, f64::min);
    assert_eq!(report.final_nlml, best);
    assert_eq!(report.restarts[report.winner_restart].final_nlml, Some(best));
    for r in &report.restarts {
        assert!(report.final_nlml <= r.initial_nlml.unwrap());
    }
    assert!((model.nlml().unwrap() - report.final_nlml).abs() < 1e-9);
}

#[test]
fn fit_is_deterministic() {
    let data = data30();
    let cfg = OptimizerConfig {
        seed: 9,
        ..OptimizerConfig::default()
    };
    for spec in [
        ModelSpec::Exact,
        ModelSpec::Fitc {
            pseudo_count: 6,
            seed: 2,
        },
        ModelSpec::Hat {
            knots: vec![12],
            bounds: None,
        },
    ] {
        let (a, ra) = fit(&spec, &data, &cfg).unwrap();
        let (b, rb) = fit(&spec, &data, &cfg).unwrap();
        assert_eq!(a.params(), b.params());
        assert_eq!(ra.final_nlml.to_bits(), rb.final_nlml.to_bits());
    }
}

#[test]
fn different_seeds_reach_similar_optima() {
    let data = data30();
    let nlml = |seed| {
        let cfg = OptimizerConfig {
            seed,
            ..OptimizerConfig::default()
        };
        fit(&ModelSpec::Exact, &data, &cfg).unwrap().1.final_nlml
    };
    assert!((nlml(1) - nlml(2)).abs() <= 1.0);
}

#[test]
fn parameters_stay_positive() {
    let data = data30();
    let spec = ModelSpec::Hat {
        knots: vec![8],
        bounds: None,
    };
    let (model, _) = fit(&spec, &data, &OptimizerConfig::default()).unwrap();
    let h = model.params();
    assert!(h.amplitude > 0.0 && h.noise_std > 0.0 && h.lengthscales.iter().all(|l| *l > 0.0));
}

#[test]
fn numerical_failure_in_every_restart() {
    let base = Hyperparams::new(1.0, vec![1.0], 0.1, 0.0).unwrap();
    let failing = |_: &Hyperparams| -> hatgp::Result<(f64, Vec<f64>)> { Err(Error::NotPositiveDefinite { max_jitter: 1e-2 }) };
    let err = optimize_with(failing, &base, &OptimizerConfig::default()).unwrap_err();
    assert!(matches!(err, Error::AllRestartsFailed(3)), "{err}");
}

#[test]
fn failing_restarts_are_skipped() {
    // fails only far from the base point, so some restarts survive
    let base = Hyperparams::new(1.0, vec![1.0], 0.1, 0.0).unwrap();
    let objective = |h: &Hyperparams| -> hatgp::Result<(f64, Vec<f64>)> {
        if h.amplitude > 1.5 || h.amplitude < 0.66 {
            return Err(Error::NotPositiveDefinite { max_jitter: 1e-2 });
        }
        let v = [h.amplitude.ln(), h.lengthscales[0].ln(), h.noise_std.ln() + 1.0, h.const_mean];
        let f = v.iter().map(|x| x * x).sum::<f64>();
        Ok((f, v.iter().map(|x| 2.0 * x).collect()))
    };
    let cfg = OptimizerConfig { restarts: 6, seed: 1, ..OptimizerConfig::default() };
    let (h, report) = optimize_with(objective, &base, &cfg).unwrap();
    assert!(report.restarts.iter().any(|r| r.error.is_some()));
    assert!(report.final_nlml < 1e-10);
    assert!((h.noise_std - (-1f64).exp()).abs() < 1e-6);
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = OptimizerConfig {
        restarts: 0,
        ..OptimizerConfig::default()
    };
    assert!(matches!(fit(&ModelSpec::Exact, &data30(), &cfg), Err(Error::Config(_))));
}

#[test]
fn structural_errors_are_not_retried() {
    let spec = ModelSpec::Fitc {
        pseudo_count: 31,
        seed: 0,
    };
    let err = fit(&spec, &data30(), &OptimizerConfig::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidSpec(_)));
}
