//! Configured experiments, their reports and output files.

mod config;

pub use config::{
    experiment_spec, list_experiments, parse_config, parse_schedule, ConfigError, ExperimentConfig, ExperimentKind,
    ExperimentSpec, Kind, Param, EXPERIMENTS,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use ndarray::{array, Array1, Array2};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::ito_approx::{convergence_study, reference_integral, ApproxSchedule, ComposedWithInverse, ConvergenceReport, DeterministicIntegrand};
use crate::lab::{
    covariation_check, gronwall_experiment, law_flip_from, moment_check, monotone_certificate, pathwise_from,
    reconstruction_refinement, second_moment_oracle, tanaka_phi_reconstruct, tanaka_simulate, GronwallConfig,
    GronwallReport, TanakaConfig, TanakaEnsemble, KS_MIN_SAMPLES,
};
use crate::moving_frame::{delta, gamma, FnCoefficients, FrameCoefficients};
use crate::noise::{associate_q_wiener, harmonic_embedding, sample_driver};
use crate::report::{Check, StatReport, Verdict};
use crate::semigroups::{build_dilation, dilation_diagram_error, DiagonalSemigroup, Dilation, GroupFrame, TranslationGroup};
use crate::solvers::{euler_maruyama, exp_euler_mild};
use crate::spaces::{PathRecord, SpatialGrid, TimeGrid};

pub const ARTIFACT: &str = "spde-frame";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub artifact: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub counts: BTreeMap<String, u64>,
    pub notes: Vec<String>,
    pub details: Value,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// The report with timing fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

/// A finished run: the report plus CSV files keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    /// Writes `report.json` and the CSV files into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.report.to_json())?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

struct Outcome {
    stats: StatReport,
    details: Value,
    files: Vec<(String, String)>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let out = match cfg.kind {
        ExperimentKind::DilationCheck => dilation_check(cfg)?,
        ExperimentKind::FrameRoundtrip => frame_roundtrip(cfg)?,
        ExperimentKind::Correspondence => correspondence(cfg)?,
        ExperimentKind::ItoApprox => ito_approx(cfg)?,
        ExperimentKind::Tanaka => tanaka(cfg)?,
        ExperimentKind::Monotone => monotone(cfg)?,
    };
    let report = RunReport {
        artifact: ARTIFACT,
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.name(),
        seed: cfg.seed(),
        config: cfg.echo(),
        verdict: out.stats.verdict(),
        checks: out.stats.checks,
        counts: out.stats.counts,
        notes: out.stats.notes,
        details: out.details,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        report,
        files: out.files,
    })
}

fn harmonic_rates(n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |k| (k + 1) as f64)
}

fn grid_of(cfg: &ExperimentConfig) -> Result<TimeGrid> {
    TimeGrid::new(cfg.real("grid.t_end"), cfg.count("grid.n_steps"))
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize, weight: f64) -> Array1<f64> {
    let v: Array1<f64> = Array1::from_shape_simple_fn(dim, || StandardNormal.sample(&mut *rng));
    let norm = (weight * v.dot(&v)).sqrt();
    v / norm
}

fn dilation_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n = cfg.count("space.n_modes");
    let space = SpatialGrid::new(cfg.real("space.x_min"), cfg.real("space.x_max"), cfg.real("space.h"))?;
    let frame = build_dilation(harmonic_rates(n).view(), &space, cfg.real("space.tail_tol"))?;
    let times = cfg.reals("check.times");
    let ks: Vec<usize> = (0..n).collect();
    let diagram = dilation_diagram_error(&frame, &times, &ks)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let (mut adjoint, mut isometry) = (0.0_f64, 0.0_f64);
    for _ in 0..cfg.count("check.pairs") {
        let v = unit_gaussian(&mut rng, n, frame.base_weight());
        let g = unit_gaussian(&mut rng, frame.big_dim(), frame.big_weight());
        let lv = frame.embed(v.view());
        let lhs = frame.big_inner(lv.view(), g.view());
        let rhs = frame.base_weight() * v.dot(&frame.project(g.view()));
        adjoint = adjoint.max((lhs - rhs).abs());
        isometry = isometry.max((frame.big_norm(lv.view()) - frame.base_norm(v.view())).abs());
    }
    let mut stats = StatReport::default();
    let tol = cfg.real("check.adjoint_tol");
    stats.push(Check::at_most("max diagram error", diagram, cfg.real("check.diagram_tol"), "semigroups::dilation_diagram_error"));
    stats.push(Check::at_most("max |<l v, g> - <v, pi g>|", adjoint, tol, "semigroups::build_dilation"));
    stats.push(Check::at_most("max | |l v| - |v| |", isometry, tol, "semigroups::build_dilation"));
    stats.count("pairs", cfg.count("check.pairs") as u64);
    Ok(Outcome {
        stats,
        details: json!({ "frame": frame.summary(), "times": times }),
        files: Vec::new(),
    })
}

/// `a bump(x - c - v t)` with support `|x - c - v t| < 1`.
fn moving_bump(rng: &mut ChaCha8Rng, grid: TimeGrid, space: SpatialGrid) -> PathRecord {
    let amp: f64 = StandardNormal.sample(&mut *rng);
    let u = |r: &mut ChaCha8Rng| (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let c = 2.0 * u(rng) - 1.0;
    let speed = u(rng) - 0.5;
    PathRecord::from_fn(grid, space.n_points(), space.h(), |t| {
        Array1::from_shape_fn(space.n_points(), |i| {
            let y = space.x(i) - c - speed * t;
            if y.abs() < 1.0 {
                amp * (1.0 - y * y).powi(2)
            } else {
                0.0
            }
        })
    })
}

fn max_abs_diff(a: &PathRecord, b: &PathRecord) -> f64 {
    (&a.states() - &b.states()).iter().fold(0.0_f64, |m, d| m.max(d.abs()))
}

fn frame_roundtrip(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = grid_of(cfg)?;
    let n = cfg.count("space.n_modes");
    let space = SpatialGrid::new(cfg.real("space.x_min"), cfg.real("space.x_max"), cfg.real("space.h"))?;
    let frame = build_dilation(harmonic_rates(n).view(), &space, cfg.real("space.tail_tol"))?;
    frame.check_horizon(grid.t_end())?;
    let group_space = SpatialGrid::new(cfg.real("group.x_min"), cfg.real("group.x_max"), grid.dt())?;
    let group = GroupFrame {
        group: TranslationGroup::new(group_space),
    };
    let paths = cfg.count("check.paths");
    let (mut right_inverse, mut group_gd, mut group_dg) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    rng.set_stream(1);
    for p in 0..paths {
        let v = sample_driver(grid, n, cfg.seed(), p as u64)?.cumulative();
        right_inverse = right_inverse.max(max_abs_diff(&gamma(&frame, &delta(&frame, &v)?)?, &v));
        let w = moving_bump(&mut rng, grid, group_space);
        group_gd = group_gd.max(max_abs_diff(&gamma(&group, &delta(&group, &w)?)?, &w));
        group_dg = group_dg.max(max_abs_diff(&delta(&group, &gamma(&group, &w)?)?, &w));
    }
    let tol = cfg.real("check.tol");
    let mut stats = StatReport::default();
    stats.push(Check::at_most("max |Gamma(Delta(v)) - v|", right_inverse, tol, "moving_frame::gamma"));
    stats.push(Check::at_most("group: max |Gamma(Delta(w)) - w|", group_gd, tol, "moving_frame::gamma"));
    stats.push(Check::at_most("group: max |Delta(Gamma(w)) - w|", group_dg, tol, "moving_frame::delta"));
    stats.count("paths", paths as u64);
    stats.note("group-case paths are bumps supported at distance >= t_end from the window edges");
    Ok(Outcome {
        stats,
        details: json!({ "frame": frame.summary(), "group_points": group_space.n_points() }),
        files: Vec::new(),
    })
}

fn correspondence_coefficients(n: usize) -> FnCoefficients {
    let sigma = Array2::from_diag(&harmonic_embedding(n));
    FnCoefficients::new(n, n, |_, x| -&x, move |_, _| sigma.clone())
}

fn correspondence(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n = cfg.count("space.n_modes");
    let t_end = cfg.real("grid.t_end");
    let mut levels: Vec<u32> = cfg.reals("check.levels").iter().map(|&l| l as u32).collect();
    levels.sort_unstable();
    levels.dedup();
    let finest = *levels.last().expect("at least two levels");
    let paths = cfg.count("check.paths");
    let coeffs = correspondence_coefficients(n);
    let semigroup = DiagonalSemigroup::harmonic(n);
    let fine_grid = TimeGrid::new(t_end, (t_end * f64::from(2u32.pow(finest))).round() as usize)?;

    let mut rows = Vec::new();
    for &level in &levels {
        let factor = 2usize.pow(finest - level);
        let dt = fine_grid.dt() * factor as f64;
        let space = SpatialGrid::new(cfg.real("space.x_min"), cfg.real("space.x_max"), dt)?;
        let frame = build_dilation(harmonic_rates(n).view(), &space, cfg.real("space.tail_tol"))?;
        let lifted = FrameCoefficients::new(&frame, &coeffs)?;
        let mut total = 0.0;
        for p in 0..paths {
            let driver = sample_driver(fine_grid, n, cfg.seed(), p as u64)?.coarsen(factor)?;
            lifted.check_frame_grid(&driver.grid)?;
            let x = exp_euler_mild(&semigroup, &coeffs, Array1::zeros(n).view(), &driver)?;
            let y = euler_maruyama(&lifted, Array1::zeros(frame.big_dim()).view(), &driver)?;
            total += gamma(&frame, &y)?.sup_distance(&x)?;
        }
        rows.push((level, dt, total / paths as f64, frame.big_dim()));
    }

    let errors: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let mut stats = StatReport::default();
    stats.push(Check::holds(
        "mean sup error strictly decreasing in dt",
        errors.windows(2).all(|w| w[1] < w[0]),
        "solvers::exp_euler_mild vs moving_frame::gamma",
    ));
    stats.push(Check::at_least(
        "error(coarsest) / error(finest)",
        errors[0] / errors[errors.len() - 1],
        cfg.real("check.ratio"),
        "solvers::exp_euler_mild vs moving_frame::gamma",
    ));
    stats.push(Check::at_most(
        "error(finest)",
        errors[errors.len() - 1],
        cfg.real("check.final_tol"),
        "solvers::exp_euler_mild vs moving_frame::gamma",
    ));
    stats.count("paths per level", paths as u64);
    stats.note("both schemes use the kernels S_(t_n - t_j) on the same grid, so their difference is the frame truncation error, not a discretization error");

    let mut csv = String::from("level,dt,mean_sup_error,big_dim\n");
    for (level, dt, err, big) in &rows {
        writeln!(csv, "{level},{dt},{err:e},{big}").expect("string write");
    }
    Ok(Outcome {
        stats,
        details: json!({
            "levels": rows.iter().map(|r| json!({"level": r.0, "dt": r.1, "mean_sup_error": r.2, "big_dim": r.3})).collect::<Vec<_>>(),
        }),
        files: vec![("convergence.csv".into(), csv)],
    })
}

fn ito_approx(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = grid_of(cfg)?;
    let n = cfg.count("space.n_modes");
    let j_diag = harmonic_embedding(n);
    let lambda = j_diag.mapv(|j| j * j);
    let b = DeterministicIntegrand::new(n, n, move |t| {
        Array2::from_diag(&Array1::from_shape_fn(n, |k| (-((k + 1) as f64) * t).exp() / (k + 1) as f64))
    });
    let b_bar = ComposedWithInverse::new(b, lambda.view())?;
    let schedule = ApproxSchedule::uniform(cfg.schedule("check.schedule"), grid.t_end().ceil() as usize)?;
    let tol = cfg.real("check.tol");
    let x = PathRecord::zeros(grid, n, 1.0);
    let paths = cfg.count("check.paths");
    let mut per_path = Vec::with_capacity(paths);
    for p in 0..paths {
        let driver = sample_driver(grid, n, cfg.seed(), p as u64)?;
        let q = associate_q_wiener(&driver, j_diag.view())?;
        let reference = reference_integral(&b_bar, &x.full(), &q)?;
        per_path.push(convergence_study(&b_bar, &x.full(), &q, &schedule, &reference, tol)?);
    }
    let avg = ConvergenceReport::average(&schedule, &per_path, tol);
    let mut stats = StatReport::default();
    stats.push(Check::holds("mean sup errors nonincreasing", avg.nonincreasing, "ito_approx::convergence_study"));
    stats.push(Check::at_most("final-stage mean sup error", avg.final_error, tol, "ito_approx::convergence_study"));
    stats.count("paths", paths as u64);
    stats.note(format!("mollifier convention: {}", avg.mollifier_convention));
    let last_m = schedule.horizons[0].last().map_or(1, |s| s.m);
    stats.note(format!(
        "every finite-l stage vanishes at t = 0 (zero extension), so the first block of noise is dropped; its rms size is {:.3e}",
        first_block_rms(&lambda, (1.0 / last_m as f64).max(grid.dt()))
    ));
    let mut csv = Vec::new();
    avg.write_csv(&mut csv).expect("in-memory write");
    Ok(Outcome {
        stats,
        details: json!({ "stages": avg.stages }),
        files: vec![("convergence.csv".into(), String::from_utf8(csv).expect("ascii"))],
    })
}

/// Root-mean-square norm of the Q-Wiener increment over a block of length `block`.
fn first_block_rms(lambda: &Array1<f64>, block: f64) -> f64 {
    (block * lambda.sum()).sqrt()
}

fn tanaka(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = grid_of(cfg)?;
    let n = cfg.count("space.n_modes");
    let n_paths = cfg.count("tanaka.n_paths");
    let tcfg = TanakaConfig {
        n_modes: n,
        grid,
        n_paths,
        seed: cfg.seed(),
    };
    let underpowered = n_paths < cfg.count("tanaka.min_paths");
    let soften = |r: StatReport| -> StatReport {
        if !underpowered {
            return r;
        }
        StatReport {
            checks: r.checks.into_iter().map(Check::soft).collect(),
            ..r
        }
    };
    let mut stats = StatReport::default();
    stats.push(
        Check::at_least("n_paths", n_paths as f64, cfg.count("tanaka.min_paths") as f64, "cli::tanaka").soft(),
    );

    let ens = TanakaEnsemble::simulate(&tcfg, 0)?;
    stats.extend(soften(moment_check(&ens)));
    stats.extend(soften(covariation_check(&ens)));

    let half = n_paths / 2;
    let mut law = Value::Null;
    if half >= KS_MIN_SAMPLES {
        let a = TanakaEnsemble::simulate(&TanakaConfig { n_paths: half, ..tcfg }, 0)?;
        let b = TanakaEnsemble::simulate(&TanakaConfig { n_paths: half, ..tcfg }, half as u64)?;
        let rep = law_flip_from(&a, &b, cfg.real("tanaka.alpha"))?;
        let mut ks = StatReport::default();
        ks.push(Check::at_most("KS X^1(T) vs -X'^1(T)", rep.sign.statistic, rep.sign.threshold, "uniqueness_lab::law_flip_test"));
        ks.push(Check::at_most(
            "KS X^1(T) vs Phi(B)^1(T)",
            rep.reconstruction.statistic,
            rep.reconstruction.threshold,
            "uniqueness_lab::law_flip_test",
        ));
        stats.extend(soften(ks));
        law = json!(rep);
    } else {
        stats.push(Check::holds("KS sample size", false, "uniqueness_lab::ks_two_sample").soft());
        stats.note(format!("KS tests skipped: {half} samples per side, at least {KS_MIN_SAMPLES} needed"));
    }

    let mut pathwise = pathwise_from(&ens, cfg.real("tanaka.threshold"));
    if underpowered {
        pathwise.checks = pathwise
            .checks
            .into_iter()
            .map(|c| if c.name.starts_with('P') { c.soft() } else { c })
            .collect();
    }
    stats.extend(pathwise);

    let recon = reconstruction_refinement(
        &TanakaConfig {
            n_paths: cfg.count("tanaka.recon_paths"),
            ..tcfg
        },
        cfg.real("tanaka.recon_tol"),
    )?;
    stats.extend(recon.report.clone());
    stats.note("no mild solution exists for this equation; that is a theorem, not something a finite run can show");

    let (run, _) = tanaka_simulate(&tcfg, 0)?;
    let phi = tanaka_phi_reconstruct(&run.b);
    let mut csv = String::from("t");
    for prefix in ["x", "b", "phi"] {
        for k in 1..=n {
            write!(csv, ",{prefix}_{k}").expect("string write");
        }
    }
    csv.push('\n');
    for i in 0..grid.n_points() {
        write!(csv, "{}", grid.time(i)).expect("string write");
        for rec in [&run.x, &run.b, &phi] {
            for v in rec.state(i) {
                write!(csv, ",{v:e}").expect("string write");
            }
        }
        csv.push('\n');
    }
    let oracle: Vec<f64> = (1..=n.min(4)).map(|k| second_moment_oracle(k, grid.t_end())).collect();
    Ok(Outcome {
        stats,
        details: json!({
            "second_moment_oracle": oracle,
            "law": law,
            "reconstruction": { "dt": recon.dt, "coarse": recon.coarse, "fine": recon.fine },
        }),
        files: vec![("paths_tanaka.csv".into(), csv)],
    })
}

fn gronwall_rows(name: &str, r: &GronwallReport, csv: &mut String) {
    for (i, t) in r.times.iter().enumerate() {
        writeln!(csv, "{name},{t},{:e},{:e}", r.mean_sq_gap[i], r.bound[i]).expect("string write");
    }
}

fn monotone(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = grid_of(cfg)?;
    let n = cfg.count("space.n_modes");
    let samples = cfg.count("monotone.samples");
    let radius = cfg.real("monotone.radius");
    let seed = cfg.seed();
    let base = GronwallConfig {
        l: 0.0,
        eps: cfg.real("monotone.eps"),
        grid,
        n_paths: cfg.count("monotone.paths"),
        seed,
        certificate_samples: samples,
        radius,
    };
    let additive = Array2::eye(n) * 0.5;
    let contraction = {
        let s = additive.clone();
        FnCoefficients::new(n, n, |_, x| -&x, move |_, _| s.clone())
    };
    let expansion = {
        let s = additive.clone();
        FnCoefficients::new(n, n, |_, x| x.to_owned(), move |_, _| s.clone())
    };
    let multiplicative = FnCoefficients::new(1, 1, |_, _| array![0.0], |_, x| array![[x[0]]]);

    let mut stats = StatReport::default();
    let tag = |name: &str, r: StatReport, stats: &mut StatReport| {
        for mut c in r.checks {
            c.name = format!("{name}: {}", c.name);
            stats.push(c);
        }
    };
    tag("alpha = -x, L = 0", monotone_certificate(&contraction, &|_| 0.0, &grid, samples, radius, seed), &mut stats);
    tag("alpha = x, L = 2", monotone_certificate(&expansion, &|_| 2.0, &grid, samples, radius, seed), &mut stats);
    let rejected = !monotone_certificate(&expansion, &|_| 1.0, &grid, samples, radius, seed).passed();
    stats.push(Check::holds("alpha = x is rejected with L = 1", rejected, "uniqueness_lab::monotone_certificate"));
    tag("sigma = x, L = 1", monotone_certificate(&multiplicative, &|_| 1.0, &grid, samples, radius, seed), &mut stats);

    let x0 = Array1::from_elem(n, 0.5);
    let contract_run = gronwall_experiment(&contraction, None, x0.view(), &base)?;
    tag("gronwall alpha = -x", contract_run.report.clone(), &mut stats);
    let expand_run = gronwall_experiment(&expansion, None, x0.view(), &GronwallConfig { l: 2.0, ..base })?;
    tag("gronwall alpha = x", expand_run.report.clone(), &mut stats);
    let mult_run = gronwall_experiment(&multiplicative, None, array![0.5].view(), &GronwallConfig { l: 1.0, ..base })?;
    tag("gronwall sigma = x", mult_run.report.clone(), &mut stats);

    let space = SpatialGrid::new(cfg.real("group.x_min"), cfg.real("group.x_max"), grid.dt())?;
    let group = GroupFrame {
        group: TranslationGroup::new(space),
    };
    let m = space.n_points();
    let nemytskii = FnCoefficients::new(m, 1, |_, x| x.mapv(f64::sin), move |_, _| Array2::from_elem((m, 1), 0.2))
        .with_weight(space.h());
    let g0 = Array1::from_shape_fn(m, |i| (-space.x(i).powi(2)).exp());
    let group_run = gronwall_experiment(&nemytskii, Some(&group), g0.view(), &GronwallConfig { l: 2.0, ..base })?;
    tag("gronwall translation group, alpha = sin", group_run.report.clone(), &mut stats);
    stats.note("for sigma = x the gap is a geometric Brownian motion, so its mean square sits on the bound and a 64-path mean exceeds 1.1x for some seeds");

    let mut csv = String::from("run,t,mean_sq_gap,bound\n");
    gronwall_rows("contraction", &contract_run, &mut csv);
    gronwall_rows("expansion", &expand_run, &mut csv);
    gronwall_rows("multiplicative", &mult_run, &mut csv);
    gronwall_rows("group_sin", &group_run, &mut csv);
    Ok(Outcome {
        stats,
        details: json!({
            "contraction": { "l": contract_run.l, "final_gap": contract_run.mean_sq_gap.last() },
            "expansion": { "l": expand_run.l, "final_gap": expand_run.mean_sq_gap.last() },
            "multiplicative": { "l": mult_run.l, "final_gap": mult_run.mean_sq_gap.last() },
            "group": { "l": group_run.l, "final_gap": group_run.mean_sq_gap.last(), "points": m },
        }),
        files: vec![("paths_gronwall.csv".into(), csv)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind, overrides: &[(&str, &str)]) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(kind);
        for (k, v) in overrides {
            cfg.set(k, v).unwrap();
        }
        cfg
    }

    #[test]
    fn dilation_check_defaults_pass() {
        let out = run(&ExperimentConfig::defaults(ExperimentKind::DilationCheck)).unwrap();
        assert_eq!(out.report.verdict, Verdict::Pass, "{}", out.report.to_json());
    }

    #[test]
    fn roundtrip_small() {
        let cfg = small(
            ExperimentKind::FrameRoundtrip,
            &[("space.n_modes", "3"), ("check.paths", "3"), ("grid.n_steps", "64"), ("space.h", "0.015625"), ("space.tail_tol", "1e-6"), ("space.x_min", "-8")],
        );
        let out = run(&cfg).unwrap();
        assert_eq!(out.report.verdict, Verdict::Pass, "{}", out.report.to_json());
    }

    #[test]
    fn tanaka_underpowered_warns() {
        let cfg = small(ExperimentKind::Tanaka, &[("tanaka.n_paths", "10"), ("grid.n_steps", "256"), ("tanaka.recon_paths", "50"), ("tanaka.recon_tol", "0.05")]);
        let out = run(&cfg).unwrap();
        assert_eq!(out.report.verdict, Verdict::Warn, "{}", out.report.to_json());
        assert!(out.report.notes.iter().any(|n| n.contains("KS tests skipped")));
        assert!(out.files[0].1.starts_with("t,x_1,x_2,x_3,x_4,b_1"));
    }

    #[test]
    fn ito_small_is_reproducible() {
        let cfg = small(
            ExperimentKind::ItoApprox,
            &[("check.schedule", "1,1,4,4; inf,4,256,256"), ("grid.n_steps", "256"), ("check.paths", "2"), ("check.tol", "0.05")],
        );
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.report.without_timing(), b.report.without_timing());
        assert_eq!(a.files, b.files);
        assert!(a.files[0].1.starts_with("stage,j,k,l,m,sup_error\n"));
        assert!(a.report.checks.iter().all(|c| !c.provenance.is_empty()));
    }

    #[test]
    fn monotone_small() {
        let cfg = small(ExperimentKind::Monotone, &[("monotone.paths", "4"), ("monotone.samples", "200")]);
        let out = run(&cfg).unwrap();
        // the sigma = x gap mean is too noisy at this size to be asserted either way
        let noisy = "gronwall sigma = x: max_t";
        assert!(out.report.checks.iter().any(|c| c.name.starts_with(noisy)));
        for c in out.report.checks.iter().filter(|c| !c.name.starts_with(noisy)) {
            assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        }
    }

    #[test]
    fn outputs_are_written() {
        let cfg = small(ExperimentKind::DilationCheck, &[("check.pairs", "3")]);
        let out = run(&cfg).unwrap();
        let dir = std::env::temp_dir().join(format!("spde-frame-out-{}", std::process::id()));
        out.write_to(&dir).unwrap();
        let text = fs::read_to_string(dir.join("report.json")).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["experiment"], "dilation-check");
        assert_eq!(v["config"]["space.h"], "0.0625");
        fs::remove_dir_all(dir).unwrap();
    }
}
