//! Monte Carlo experiments around uniqueness: the infinite-dimensional Tanaka
//! equation `dX = AX dt + sgn(X) dW` with `A e_k = -k e_k` (componentwise
//! `sgn`, `Q = diag(1/k^2)`), and the monotone-coefficient Gronwall runs.
//!
//! "Uniqueness in law" is only probed through fixed-time marginals (a
//! two-sample KS test) and through the functional reconstruction `X = Phi(B)`;
//! path-space laws are never compared.

mod gronwall;
mod ks;

pub use gronwall::{gronwall_experiment, monotone_certificate, GronwallConfig, GronwallReport, MONOTONE_TOL};
pub use ks::{ks_critical_value, ks_statistic, ks_two_sample, LawTestReport, KS_MIN_SAMPLES};

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use serde::Serialize;

use crate::error::{FrameError, Result};
use crate::noise::{sample_driver, DriverBundle};
use crate::report::{Check, StatReport};
use crate::spaces::{PathRecord, TimeGrid};

/// `1` for `x > 0`, `-1` for `x <= 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TanakaConfig {
    pub n_modes: usize,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
}

impl TanakaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(FrameError::Precondition("Tanaka model needs N >= 1 modes".into()));
        }
        if self.n_paths == 0 {
            return Err(FrameError::Precondition("n_paths must be positive".into()));
        }
        Ok(())
    }
}

/// One simulated path: the solution `X` and `B^k = (1/k) int sgn(X^k) d beta^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanakaRun {
    pub x: PathRecord,
    pub b: PathRecord,
}

/// Exponential-Euler recursion `X^k_{i+1} = e^{-k dt} (X^k_i + sgn(X^k_i) d beta^k_i / k)`, `X(0) = 0`.
pub fn tanaka_run(driver: &DriverBundle) -> TanakaRun {
    let grid = driver.grid;
    let n = driver.modes();
    let dt = grid.dt();
    let mut x = Array2::zeros((grid.n_points(), n));
    let mut b = Array2::zeros((grid.n_points(), n));
    for k in 0..n {
        let rate = (k + 1) as f64;
        let decay = (-rate * dt).exp();
        let (mut xk, mut bk) = (0.0, 0.0);
        for i in 0..grid.n_steps() {
            let db = sgn(xk) * driver.increments()[[i, k]] / rate;
            xk = decay * (xk + db);
            bk += db;
            x[[i + 1, k]] = xk;
            b[[i + 1, k]] = bk;
        }
    }
    TanakaRun {
        x: PathRecord::from_states(grid, x, 1.0).expect("shape built from grid"),
        b: PathRecord::from_states(grid, b, 1.0).expect("shape built from grid"),
    }
}

pub fn tanaka_simulate(cfg: &TanakaConfig, stream_id: u64) -> Result<(TanakaRun, DriverBundle)> {
    cfg.validate()?;
    let driver = sample_driver(cfg.grid, cfg.n_modes, cfg.seed, stream_id)?;
    Ok((tanaka_run(&driver), driver))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignFlip {
    pub defect: f64,
    /// Mode-steps skipped because `X^k_i == 0`, where `sgn(-0) != -sgn(0)`.
    pub excluded: u64,
    pub total: u64,
}

impl SignFlip {
    pub fn degenerate(&self) -> bool {
        self.excluded == self.total
    }
}

/// Defect of `-X` in the recursion driven by the same increments.
pub fn signflip_residual(x: &PathRecord, driver: &DriverBundle) -> Result<SignFlip> {
    x.grid().check_same(&driver.grid)?;
    if x.dim() != driver.modes() {
        return Err(FrameError::Dimension {
            context: "Tanaka modes",
            expected: driver.modes(),
            found: x.dim(),
        });
    }
    let dt = driver.grid.dt();
    let mut flip = SignFlip {
        defect: 0.0,
        excluded: 0,
        total: (driver.grid.n_steps() * x.dim()) as u64,
    };
    for k in 0..x.dim() {
        let rate = (k + 1) as f64;
        let decay = (-rate * dt).exp();
        for i in 0..driver.grid.n_steps() {
            let xi = x.states()[[i, k]];
            if xi == 0.0 {
                flip.excluded += 1;
                continue;
            }
            let y = -xi;
            let next = decay * (y + sgn(y) * driver.increments()[[i, k]] / rate);
            flip.defect = flip.defect.max((next + x.states()[[i + 1, k]]).abs());
        }
    }
    Ok(flip)
}

/// `Phi(B)^k(t) = B^k(t) - k int_0^t e^{-k(t-s)} B^k(s) ds`, trapezoidal in `s`.
pub fn tanaka_phi_reconstruct(b: &PathRecord) -> PathRecord {
    let grid = *b.grid();
    let dt = grid.dt();
    let mut out = Array2::zeros((grid.n_points(), b.dim()));
    for k in 0..b.dim() {
        let rate = (k + 1) as f64;
        let decay = (-rate * dt).exp();
        let col = b.coordinate(k);
        let mut j = 0.0;
        for i in 0..grid.n_steps() {
            j = decay * j + 0.5 * dt * (decay * col[i] + col[i + 1]);
            out[[i + 1, k]] = col[i + 1] - rate * j;
        }
    }
    PathRecord::from_states(grid, out, b.weight()).expect("shape built from grid")
}

/// `E[X^k(t)^2] = (1 - e^{-2kt}) / (2k^3)`.
pub fn second_moment_oracle(k: usize, t: f64) -> f64 {
    let k = k as f64;
    (1.0 - (-2.0 * k * t).exp()) / (2.0 * k.powi(3))
}

/// Per-path summaries of a batch of Tanaka runs; full paths are not retained.
#[derive(Debug, Clone, PartialEq)]
pub struct TanakaEnsemble {
    pub cfg: TanakaConfig,
    pub first_stream: u64,
    pub marks: Vec<f64>,
    /// `x_at[m][[p, k]] = X^{k+1}(marks[m])` on path `p`.
    pub x_at: Vec<Array2<f64>>,
    pub phi_end: Array2<f64>,
    pub sup_x1: Array1<f64>,
    pub recon_sup: Array2<f64>,
    /// Sum and sum of squares over paths of `sum_i dB_i dB_i^T`.
    pub cov_sum: Array2<f64>,
    pub cov_sq_sum: Array2<f64>,
    pub flip_defect: f64,
    pub flip_excluded: u64,
    pub flip_total: u64,
    pub degenerate_paths: usize,
}

fn default_marks(grid: &TimeGrid) -> Vec<f64> {
    let mut marks: Vec<f64> = [0.5, 1.0]
        .into_iter()
        .filter(|&t| t <= grid.t_end() && grid.index_of(t).is_ok())
        .collect();
    if !marks.iter().any(|&t| (t - grid.t_end()).abs() < 1e-12) {
        marks.push(grid.t_end());
    }
    marks
}

impl TanakaEnsemble {
    /// Paths on streams `first_stream .. first_stream + n_paths`.
    pub fn simulate(cfg: &TanakaConfig, first_stream: u64) -> Result<Self> {
        Self::simulate_with(cfg, first_stream, |s| sample_driver(cfg.grid, cfg.n_modes, cfg.seed, s))
    }

    /// As [`TanakaEnsemble::simulate`] with drivers from `driver_for(stream_id)`.
    pub fn simulate_with(
        cfg: &TanakaConfig,
        first_stream: u64,
        mut driver_for: impl FnMut(u64) -> Result<DriverBundle>,
    ) -> Result<Self> {
        cfg.validate()?;
        let (n, p) = (cfg.n_modes, cfg.n_paths);
        let marks = default_marks(&cfg.grid);
        let mark_idx: Vec<usize> = marks.iter().map(|&t| cfg.grid.floor_index(t)).collect();
        let mut ens = Self {
            cfg: *cfg,
            first_stream,
            x_at: vec![Array2::zeros((p, n)); marks.len()],
            marks,
            phi_end: Array2::zeros((p, n)),
            sup_x1: Array1::zeros(p),
            recon_sup: Array2::zeros((p, n)),
            cov_sum: Array2::zeros((n, n)),
            cov_sq_sum: Array2::zeros((n, n)),
            flip_defect: 0.0,
            flip_excluded: 0,
            flip_total: 0,
            degenerate_paths: 0,
        };
        let last = cfg.grid.n_steps();
        for path in 0..p {
            let driver = driver_for(first_stream + path as u64)?;
            cfg.grid.check_same(&driver.grid)?;
            if driver.modes() != n {
                return Err(FrameError::Dimension {
                    context: "Tanaka driver modes",
                    expected: n,
                    found: driver.modes(),
                });
            }
            let run = tanaka_run(&driver);
            let phi = tanaka_phi_reconstruct(&run.b);
            for (m, &i) in mark_idx.iter().enumerate() {
                ens.x_at[m].row_mut(path).assign(&run.x.state(i));
            }
            ens.phi_end.row_mut(path).assign(&phi.state(last));
            ens.sup_x1[path] = run.x.coordinate(0).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let diff = &run.x.states() - &phi.states();
            for k in 0..n {
                ens.recon_sup[[path, k]] = diff.column(k).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            }
            let db = &run.b.states().slice(s![1.., ..]) - &run.b.states().slice(s![..-1, ..]);
            let cov = db.t().dot(&db);
            ens.cov_sq_sum += &(&cov * &cov);
            ens.cov_sum += &cov;
            let flip = signflip_residual(&run.x, &driver)?;
            ens.flip_defect = ens.flip_defect.max(flip.defect);
            ens.flip_excluded += flip.excluded;
            ens.flip_total += flip.total;
            ens.degenerate_paths += flip.degenerate() as usize;
        }
        Ok(ens)
    }

    pub fn n_paths(&self) -> usize {
        self.cfg.n_paths
    }

    /// `X^k` at the final time, `k` counted from 1.
    pub fn x_end(&self, k: usize) -> ArrayView1<'_, f64> {
        self.x_at.last().expect("final time is always marked").column(k - 1)
    }
}

fn mean_and_se(v: ArrayView1<'_, f64>) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// Sample means of `X^k(t)^2` against the isometry oracle, within 4 SE plus a `5 dt` bias allowance.
pub fn moment_check(ens: &TanakaEnsemble) -> StatReport {
    let mut r = StatReport::default();
    let dt = ens.cfg.grid.dt();
    for (m, &t) in ens.marks.iter().enumerate() {
        for k in 1..=ens.cfg.n_modes.min(4) {
            let sq = ens.x_at[m].column(k - 1).mapv(|x| x * x);
            let (mean, se) = mean_and_se(sq.view());
            let oracle = second_moment_oracle(k, t);
            r.push(Check::at_most(
                format!("|mean X^{k}({t})^2 - oracle|"),
                (mean - oracle).abs(),
                4.0 * se + 5.0 * dt,
                "uniqueness_lab::moment_check",
            ));
        }
    }
    r
}

/// Realized covariation of `B` over the run against `diag(t/k^2)`, within 5 SE per entry.
pub fn covariation_check(ens: &TanakaEnsemble) -> StatReport {
    let mut r = StatReport::default();
    let n = ens.n_paths() as f64;
    let t = ens.cfg.grid.t_end();
    let modes = ens.cfg.n_modes;
    for j in 0..modes {
        for k in j..modes {
            let mean = ens.cov_sum[[j, k]] / n;
            let var = ((ens.cov_sq_sum[[j, k]] - n * mean * mean) / (n - 1.0).max(1.0)).max(0.0);
            let expect = if j == k { t / ((k + 1) as f64).powi(2) } else { 0.0 };
            r.push(Check::at_most(
                format!("|<<B>>[{},{}] - Qt|", j + 1, k + 1),
                (mean - expect).abs(),
                5.0 * (var / n).sqrt(),
                "uniqueness_lab::covariation_check",
            ));
        }
    }
    r
}

/// Mean over paths of `sup_t |X^k - Phi(B)^k|`, per mode.
pub fn reconstruction_errors(ens: &TanakaEnsemble) -> Array1<f64> {
    ens.recon_sup.mean_axis(Axis(0)).expect("at least one path")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub dt: f64,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub report: StatReport,
}

/// Reconstruction error at `cfg.grid` and on the same Brownian paths at half the step.
///
/// Passes when the coarse error is at most `tol` and every mode's error halves to within 30%.
pub fn reconstruction_refinement(cfg: &TanakaConfig, tol: f64) -> Result<Refinement> {
    let fine_grid = TimeGrid::new(cfg.grid.t_end(), 2 * cfg.grid.n_steps())?;
    let fine_cfg = TanakaConfig { grid: fine_grid, ..*cfg };
    let fine = TanakaEnsemble::simulate(&fine_cfg, 0)?;
    let coarse = TanakaEnsemble::simulate_with(cfg, 0, |s| {
        sample_driver(fine_grid, cfg.n_modes, cfg.seed, s)?.coarsen(2)
    })?;
    let (ec, ef) = (reconstruction_errors(&coarse), reconstruction_errors(&fine));
    let mut report = StatReport::default();
    for k in 0..cfg.n_modes.min(4) {
        report.push(Check::at_most(
            format!("mean sup|X^{0} - Phi(B)^{0}|", k + 1),
            ec[k],
            tol,
            "uniqueness_lab::tanaka_phi_reconstruct",
        ));
        let ratio = ef[k] / ec[k];
        report.push(Check::at_most(
            format!("|refined/coarse - 1/2| for mode {}", k + 1),
            (ratio - 0.5).abs(),
            0.15,
            "uniqueness_lab::tanaka_phi_reconstruct",
        ));
    }
    Ok(Refinement {
        dt: cfg.grid.dt(),
        coarse: ec.to_vec(),
        fine: ef.to_vec(),
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawFlipReport {
    /// `X^1(T)` against `-X'^1(T)` from independent drivers.
    pub sign: LawTestReport,
    /// `X^1(T)` against `Phi(B)^1(T)` on the same paths.
    pub reconstruction: LawTestReport,
}

impl LawFlipReport {
    pub fn passed(&self) -> bool {
        self.sign.pass && self.reconstruction.pass
    }
}

/// Law comparisons from two ensembles on disjoint streams.
pub fn law_flip_from(a: &TanakaEnsemble, b: &TanakaEnsemble, alpha: f64) -> Result<LawFlipReport> {
    let x = a.x_end(1).to_vec();
    let flipped: Vec<f64> = b.x_end(1).iter().map(|v| -v).collect();
    let phi = a.phi_end.column(0).to_vec();
    Ok(LawFlipReport {
        sign: ks_two_sample(&x, &flipped, alpha)?,
        reconstruction: ks_two_sample(&x, &phi, alpha)?,
    })
}

/// `cfg.n_paths` per sample: streams `0..n` against `n..2n`.
pub fn law_flip_test(cfg: &TanakaConfig, alpha: f64) -> Result<LawFlipReport> {
    let a = TanakaEnsemble::simulate(cfg, 0)?;
    let b = TanakaEnsemble::simulate(cfg, cfg.n_paths as u64)?;
    law_flip_from(&a, &b, alpha)
}

/// Same-driver non-uniqueness: `-X` solves the recursion too, and differs from `X` by more than `threshold`.
pub fn pathwise_from(ens: &TanakaEnsemble, threshold: f64) -> StatReport {
    let mut r = StatReport::default();
    let hits = ens.sup_x1.iter().filter(|&&s| 2.0 * s > threshold).count();
    let prob = hits as f64 / ens.n_paths() as f64;
    r.push(Check::at_least(
        format!("P(sup 2|X^1| > {threshold})"),
        prob,
        0.9,
        "uniqueness_lab::pathwise_nonuniqueness_demo",
    ));
    r.push(Check::at_most(
        "sign-flip residual",
        ens.flip_defect,
        0.0,
        "uniqueness_lab::signflip_residual",
    ));
    r.count("excluded zero-state steps", ens.flip_excluded);
    r.count("mode-steps", ens.flip_total);
    if ens.degenerate_paths > 0 {
        r.note(format!(
            "{} of {} paths stayed at zero; the flip identity is vacuous there",
            ens.degenerate_paths,
            ens.n_paths()
        ));
    }
    r.note("-X solves the same discrete equation with the same driver, so pathwise uniqueness fails");
    r
}

pub fn pathwise_nonuniqueness_demo(cfg: &TanakaConfig, threshold: f64) -> Result<StatReport> {
    Ok(pathwise_from(&TanakaEnsemble::simulate(cfg, 0)?, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_modes: usize, n_steps: usize, n_paths: usize) -> TanakaConfig {
        TanakaConfig {
            n_modes,
            grid: TimeGrid::new(1.0, n_steps).unwrap(),
            n_paths,
            seed: 11,
        }
    }

    #[test]
    fn sign_convention() {
        assert_eq!(sgn(0.0), -1.0);
        assert_eq!(sgn(-0.0), -1.0);
        assert_eq!(sgn(3.2), 1.0);
        assert_eq!(sgn(-1e-300), -1.0);
    }

    #[test]
    fn zero_driver_stays_at_zero() {
        let d = DriverBundle::zeros(TimeGrid::new(1.0, 32).unwrap(), 3);
        let run = tanaka_run(&d);
        assert!(run.x.states().iter().chain(run.b.states().iter()).all(|&v| v == 0.0));
        let flip = signflip_residual(&run.x, &d).unwrap();
        assert_eq!(flip.defect, 0.0);
        assert!(flip.degenerate());
        assert_eq!(flip.excluded, 96);
    }

    #[test]
    fn flip_is_exact_and_detects_perturbation() {
        let c = cfg(4, 256, 1);
        let (run, mut d) = tanaka_simulate(&c, 3).unwrap();
        let flip = signflip_residual(&run.x, &d).unwrap();
        assert_eq!(flip.defect, 0.0);
        assert_eq!(flip.excluded, 4);
        d.increments_mut()[[100, 1]] += 0.01;
        assert!(signflip_residual(&run.x, &d).unwrap().defect > 0.0);
    }

    #[test]
    fn reconstruction_of_linear_input() {
        let grid = TimeGrid::new(1.0, 1024).unwrap();
        let b = PathRecord::from_fn(grid, 1, 1.0, |t| ndarray::array![t]);
        let x = tanaka_phi_reconstruct(&b);
        let expect = 1.0 - (-1.0_f64).exp();
        assert!((x.state(1024)[0] - expect).abs() < 1e-6);
        let zero = tanaka_phi_reconstruct(&PathRecord::zeros(grid, 2, 1.0));
        assert!(zero.states().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_values() {
        assert!((second_moment_oracle(1, 1.0) - 0.43233).abs() < 1e-5);
        assert!((second_moment_oracle(2, 1.0) - 0.061355).abs() < 1e-6);
        assert!((second_moment_oracle(3, 1.0) - 0.018473).abs() < 1e-6);
    }

    #[test]
    fn moments_covariation_and_flip_on_small_ensemble() {
        let ens = TanakaEnsemble::simulate(&cfg(3, 256, 2000), 0).unwrap();
        let m = moment_check(&ens);
        assert!(m.passed(), "{m:#?}");
        assert_eq!(m.checks.len(), 6);
        let c = covariation_check(&ens);
        assert!(c.passed(), "{c:#?}");
        let p = pathwise_from(&ens, 0.1);
        assert!(p.passed(), "{p:#?}");
        assert_eq!(p.counts["excluded zero-state steps"], 3 * 2000);
        let inverted = pathwise_from(&ens, 1e9);
        assert_eq!(inverted.checks[0].value, 0.0);
    }

    #[test]
    fn zero_driver_demo_is_degenerate() {
        let c = cfg(2, 16, 5);
        let ens = TanakaEnsemble::simulate_with(&c, 0, |_| Ok(DriverBundle::zeros(c.grid, 2))).unwrap();
        let r = pathwise_from(&ens, 0.1);
        assert!(!r.passed());
        assert_eq!(ens.degenerate_paths, 5);
        assert!(r.notes[0].contains("stayed at zero"));
    }

    #[test]
    fn law_tests_on_moderate_sample() {
        let c = cfg(1, 128, 1000);
        let rep = law_flip_test(&c, 0.001).unwrap();
        assert!(rep.passed(), "{rep:#?}");
        let a = TanakaEnsemble::simulate(&c, 0).unwrap();
        let shifted: Vec<f64> = a.x_end(1).iter().map(|v| v + 0.5).collect();
        assert!(!ks_two_sample(&a.x_end(1).to_vec(), &shifted, 0.001).unwrap().pass);
    }

    #[test]
    fn reconstruction_error_halves() {
        let r = reconstruction_refinement(&cfg(2, 256, 200), 0.05).unwrap();
        assert!(r.report.passed(), "{r:#?}");
        assert!(r.fine[0] < r.coarse[0]);
    }
}
