//! Cross-module checks through the public API.

use ndarray::{Array1, Array2};
use spde_frame::experiments::{parse_config, run, ExperimentConfig, ExperimentKind};
use spde_frame::lab::{law_flip_from, signflip_residual, tanaka_simulate, TanakaConfig, TanakaEnsemble};
use spde_frame::moving_frame::{delta, gamma, FnCoefficients, FrameCoefficients};
use spde_frame::noise::{associate_q_wiener, harmonic_embedding, recover_components, sample_driver};
use spde_frame::report::Verdict;
use spde_frame::semigroups::{build_dilation, DiagonalSemigroup, Dilation};
use spde_frame::solvers::{euler_maruyama, exp_euler_mild};
use spde_frame::spaces::{SpatialGrid, TimeGrid};

fn rates(n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |k| (k + 1) as f64)
}

#[test]
fn lifted_sde_projects_onto_the_mild_solution() {
    let n = 3;
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let space = SpatialGrid::new(-12.0, 1.0, grid.dt()).unwrap();
    let frame = build_dilation(rates(n).view(), &space, 1e-10).unwrap();
    let sigma = Array2::from_diag(&harmonic_embedding(n));
    let coeffs = FnCoefficients::new(n, n, |_, x| -&x, move |_, _| sigma.clone());
    let lifted = FrameCoefficients::new(&frame, &coeffs).unwrap();
    let driver = sample_driver(grid, n, 4, 0).unwrap();
    let x = exp_euler_mild(&DiagonalSemigroup::harmonic(n), &coeffs, Array1::zeros(n).view(), &driver).unwrap();
    let y = euler_maruyama(&lifted, Array1::zeros(frame.big_dim()).view(), &driver).unwrap();
    let err = gamma(&frame, &y).unwrap().sup_distance(&x).unwrap();
    assert!(err < 1e-8, "{err}");
}

#[test]
fn delta_then_gamma_is_identity_on_driver_paths() {
    let grid = TimeGrid::new(0.5, 32).unwrap();
    let space = SpatialGrid::new(-12.0, 0.5, 1.0 / 64.0).unwrap();
    let frame = build_dilation(rates(4).view(), &space, 1e-10).unwrap();
    let v = sample_driver(grid, 4, 1, 2).unwrap().cumulative();
    let back = gamma(&frame, &delta(&frame, &v).unwrap()).unwrap();
    assert!(back.sup_distance(&v).unwrap() < 1e-12);
}

#[test]
fn q_wiener_roundtrip_recovers_increments() {
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let driver = sample_driver(grid, 5, 8, 0).unwrap();
    let q = associate_q_wiener(&driver, harmonic_embedding(5).view()).unwrap();
    let back = recover_components(&q).unwrap();
    let diff = (back.increments() - driver.increments()).iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn tanaka_flip_and_law_on_small_ensembles() {
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let cfg = TanakaConfig { n_modes: 2, grid, n_paths: 400, seed: 21 };
    let (run, driver) = tanaka_simulate(&cfg, 0).unwrap();
    assert_eq!(signflip_residual(&run.x, &driver).unwrap().defect, 0.0);
    let a = TanakaEnsemble::simulate(&cfg, 0).unwrap();
    let b = TanakaEnsemble::simulate(&cfg, 10_000).unwrap();
    let rep = law_flip_from(&a, &b, 0.001).unwrap();
    assert!(rep.sign.pass && rep.reconstruction.pass, "{rep:?}");
}

#[test]
fn every_default_config_parses_back() {
    for kind in [
        ExperimentKind::DilationCheck,
        ExperimentKind::FrameRoundtrip,
        ExperimentKind::Correspondence,
        ExperimentKind::ItoApprox,
        ExperimentKind::Tanaka,
        ExperimentKind::Monotone,
    ] {
        let cfg = ExperimentConfig::defaults(kind);
        let again = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(again.to_text(), cfg.to_text());
    }
}

#[test]
fn small_correspondence_run_reports_three_levels() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Correspondence);
    cfg.set("check.levels", "4,5,6").unwrap();
    cfg.set_paths(2).unwrap();
    let out = run(&cfg).unwrap();
    assert_eq!(out.report.details["levels"].as_array().unwrap().len(), 3);
    assert!(out.files.iter().any(|(name, _)| name == "convergence.csv"));
    // the finest error is frame truncation only
    let finest = out.report.checks.iter().find(|c| c.name == "error(finest)").unwrap();
    assert_eq!(finest.verdict, Verdict::Pass);
}
