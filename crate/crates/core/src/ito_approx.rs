//! Staged Riemann-sum approximations of the Ito integral `int b(s, X) dW(s)`.
//!
//! The integrand is handled as `b_bar = b o J^{-1}`, a matrix whose column `i`
//! is the image of the `i`-th eigenvector of `Q = J J^*`; its Hilbert-Schmidt
//! norm on `Q^{1/2}(U_bar)` is `sqrt(sum_i lambda_i |b_bar f_i|^2)`. A stage
//! `(j, k, l, m)` applies, in order:
//!
//! 1. `j`: zero the operator wherever its Hilbert-Schmidt norm exceeds `j` (`<= j` is kept),
//! 2. `k`: keep the first `k` eigen-directions,
//! 3. `l`: average over the window `[t - 1/l, t]` (zero for negative times),
//! 4. `m`: freeze on blocks `[i/m, (i+1)/m)`,
//!
//! and the Riemann sum integrates the result against Q-Wiener increments.

use std::io::{self, Write};

use ndarray::{Array1, Array2, ArrayView1};
use serde::Serialize;

use crate::error::{FrameError, Result};
use crate::noise::{recover_components, QWienerPath};
use crate::solvers::discrete_ito;
use crate::spaces::{integer_ratio, PathAccess, PathRecord, Refrozen, TimeGrid, GRID_TOL};

/// An operator-valued integrand `b_bar(t_i, x)` in the eigenbasis of `Q`.
pub trait OperatorIntegrand: Sync {
    fn out_dim(&self) -> usize;
    fn modes(&self) -> usize;
    fn eval(&self, i: usize, x: &dyn PathAccess) -> Array2<f64>;
}

impl<T: OperatorIntegrand + ?Sized> OperatorIntegrand for &T {
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }

    fn modes(&self) -> usize {
        (**self).modes()
    }

    fn eval(&self, i: usize, x: &dyn PathAccess) -> Array2<f64> {
        (**self).eval(i, x)
    }
}

/// Hilbert-Schmidt norm of `m` on `Q^{1/2}(U_bar)`.
pub fn hs_norm(m: &Array2<f64>, lambda: ArrayView1<'_, f64>) -> f64 {
    m.columns()
        .into_iter()
        .zip(lambda)
        .map(|(c, l)| l * c.dot(&c))
        .sum::<f64>()
        .sqrt()
}

/// Integrand depending on time only.
pub struct DeterministicIntegrand<F> {
    out_dim: usize,
    modes: usize,
    f: F,
}

impl<F: Fn(f64) -> Array2<f64> + Sync> DeterministicIntegrand<F> {
    pub fn new(out_dim: usize, modes: usize, f: F) -> Self {
        Self { out_dim, modes, f }
    }
}

impl<F: Fn(f64) -> Array2<f64> + Sync> OperatorIntegrand for DeterministicIntegrand<F> {
    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn modes(&self) -> usize {
        self.modes
    }

    fn eval(&self, i: usize, x: &dyn PathAccess) -> Array2<f64> {
        (self.f)(x.grid().time(i))
    }
}

/// `b_bar = b o J^{-1}` for an integrand `b` given against the standard driver.
pub struct ComposedWithInverse<I> {
    inner: I,
    inv_sqrt_lambda: Array1<f64>,
}

impl<I: OperatorIntegrand> ComposedWithInverse<I> {
    pub fn new(inner: I, lambda: ArrayView1<'_, f64>) -> Result<Self> {
        if lambda.len() != inner.modes() {
            return Err(FrameError::Dimension {
                context: "Q eigenvalues",
                expected: inner.modes(),
                found: lambda.len(),
            });
        }
        if let Some((index, &value)) = lambda.iter().enumerate().find(|(_, &l)| l <= 0.0) {
            return Err(FrameError::SingularEmbedding { index, value });
        }
        Ok(Self {
            inner,
            inv_sqrt_lambda: lambda.mapv(|l| 1.0 / l.sqrt()),
        })
    }
}

impl<I: OperatorIntegrand> OperatorIntegrand for ComposedWithInverse<I> {
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }

    fn modes(&self) -> usize {
        self.inner.modes()
    }

    fn eval(&self, i: usize, x: &dyn PathAccess) -> Array2<f64> {
        self.inner.eval(i, x) * &self.inv_sqrt_lambda
    }
}

pub struct HsTruncate<I> {
    inner: I,
    lambda: Array1<f64>,
    j: f64,
}

/// Keeps `b_bar(t, x)` where its Hilbert-Schmidt norm is at most `j`, zero elsewhere.
pub fn hs_truncate<I: OperatorIntegrand>(inner: I, lambda: ArrayView1<'_, f64>, j: f64) -> Result<HsTruncate<I>> {
    if lambda.len() != inner.modes() {
        return Err(FrameError::Dimension {
            context: "Q eigenvalues",
            expected: inner.modes(),
            found: lambda.len(),
        });
    }
    if j.is_nan() || j < 0.0 {
        return Err(FrameError::Range {
            what: "j",
            value: j,
            range: "[0, inf]".into(),
        });
    }
    Ok(HsTruncate {
        inner,
        lambda: lambda.to_owned(),
        j,
    })
}

impl<I: OperatorIntegrand> OperatorIntegrand for HsTruncate<I> {
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }

    fn modes(&self) -> usize {
        self.inner.modes()
    }

    fn eval(&self, i: usize, x: &dyn PathAccess) -> Array2<f64> {
        let m = self.inner.eval(i, x);
        if hs_norm(&m, self.lambda.view()) <= self.j {
            m
        } else {
            Array2::zeros(m.raw_dim())
        }
    }
}

pub struct FiniteRank<I> {
    inner: I,
    k: usize,
}

/// Keeps the first `k` eigen-directions of `Q`.
pub fn finite_rank<I: OperatorIntegrand>(inner: I, k: usize) -> Result<FiniteRank<I>> {
    if k == 0 || k > inner.modes() {
        return Err(FrameError::Range {
            what: "k",
            value: k as f64,
            range: format!("[1, {}]", inner.modes()),
        });
    }
    Ok(FiniteRank { inner, k })
}

impl<I: OperatorIntegrand> OperatorIntegrand for FiniteRank<I> {
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }

    fn modes(&self) -> usize {
        self.inner.modes()
    }

    fn eval(&self, i: usize, x: &dyn PathAccess) -> Array2<f64> {
        let mut m = self.inner.eval(i, x);
        for mut col in m.columns_mut().into_iter().skip(self.k) {
            col.fill(0.0);
        }
        m
    }
}

pub struct TimeMollify<I> {
    inner: I,
    ell: u64,
}

/// `l * int_{t - 1/l}^t b(s, x) ds` for the piecewise-constant (left-endpoint) interpolant
/// of `b` on the grid, with `b = 0` for `s < 0`.
///
/// Windows shorter than one grid cell cannot be resolved; they return the point
/// value `b(t, x)`, the `l -> inf` limit.
pub fn time_mollify<I: OperatorIntegrand>(inner: I, ell: u64) -> Result<TimeMollify<I>> {
    if ell == 0 {
        return Err(FrameError::Range {
            what: "l",
            value: 0.0,
            range: "[1, inf)".into(),
        });
    }
    Ok(TimeMollify { inner, ell })
}

impl<I: OperatorIntegrand> OperatorIntegrand for TimeMollify<I> {
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }

    fn modes(&self) -> usize {
        self.inner.modes()
    }

    fn eval(&self, i: usize, x: &dyn PathAccess) -> Array2<f64> {
        let dt = x.grid().dt();
        let width = 1.0 / self.ell as f64;
        let cells = width / dt;
        if cells < 1.0 - GRID_TOL {
            return self.inner.eval(i, x);
        }
        let ell = self.ell as f64;
        let mut acc = Array2::zeros((self.out_dim(), self.modes()));
        // cell [s_j, s_{j+1}) carries b(s_j); weight = its overlap with [t - width, t]
        let full = (cells + GRID_TOL).floor() as usize;
        let frac = (cells - full as f64).max(0.0);
        for back in 1..=full {
            if back > i {
                break;
            }
            let j = i - back;
            let view = Refrozen::new(x, j);
            acc.scaled_add(ell * dt, &self.inner.eval(j, &view));
        }
        if frac > GRID_TOL && full < i {
            let j = i - full - 1;
            let view = Refrozen::new(x, j);
            acc.scaled_add(ell * dt * frac, &self.inner.eval(j, &view));
        }
        acc
    }
}

pub struct StepDiscretize<I> {
    inner: I,
    block: usize,
}

/// Evaluates at the block start `[m t] / m`; `1/m` must be a multiple of `dt`.
pub fn step_discretize<I: OperatorIntegrand>(inner: I, m: u64, grid: &TimeGrid) -> Result<StepDiscretize<I>> {
    Ok(StepDiscretize {
        inner,
        block: block_cells(m, grid)?,
    })
}

fn block_cells(m: u64, grid: &TimeGrid) -> Result<usize> {
    if m == 0 {
        return Err(FrameError::Range {
            what: "m",
            value: 0.0,
            range: "[1, inf)".into(),
        });
    }
    match integer_ratio(1.0 / m as f64, grid.dt()) {
        Some(c) if c >= 1 => Ok(c as usize),
        _ => Err(FrameError::Commensurability {
            what: "1/m",
            value: 1.0 / m as f64,
            spacing: grid.dt(),
        }),
    }
}

impl<I: OperatorIntegrand> StepDiscretize<I> {
    pub fn block_start(&self, i: usize) -> usize {
        (i / self.block) * self.block
    }
}

impl<I: OperatorIntegrand> OperatorIntegrand for StepDiscretize<I> {
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }

    fn modes(&self) -> usize {
        self.inner.modes()
    }

    fn eval(&self, i: usize, x: &dyn PathAccess) -> Array2<f64> {
        let start = self.block_start(i);
        self.inner.eval(start, &Refrozen::new(x, start))
    }
}

/// One approximation stage `(j, k, l, m)`; `j = inf` disables the norm cut-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stage {
    pub j: f64,
    pub k: usize,
    pub ell: u64,
    pub m: u64,
}

impl Stage {
    pub fn new(j: f64, k: usize, ell: u64, m: u64) -> Self {
        Self { j, k, ell, m }
    }

    fn dominated_by(&self, next: &Stage) -> bool {
        self.j <= next.j && self.k <= next.k && self.ell <= next.ell && self.m <= next.m
    }
}

pub type StagedIntegrand<'a> =
    StepDiscretize<TimeMollify<FiniteRank<HsTruncate<&'a dyn OperatorIntegrand>>>>;

/// `b_tilde_{j,k,l,m}` built from `b_bar`.
pub fn staged<'a>(
    base: &'a dyn OperatorIntegrand,
    lambda: ArrayView1<'_, f64>,
    stage: Stage,
    grid: &TimeGrid,
) -> Result<StagedIntegrand<'a>> {
    let truncated = hs_truncate(base, lambda, stage.j)?;
    let ranked = finite_rank(truncated, stage.k.min(base.modes()))?;
    step_discretize(time_mollify(ranked, stage.ell)?, stage.m, grid)
}

/// Per-horizon stage sequences: `horizons[T-1][n]` is the stage used on `(T-1, T]` at level `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxSchedule {
    pub horizons: Vec<Vec<Stage>>,
}

impl ApproxSchedule {
    /// Same stage sequence on every horizon `1..=t_max`.
    pub fn uniform(stages: Vec<Stage>, t_max: usize) -> Result<Self> {
        let s = Self {
            horizons: vec![stages; t_max.max(1)],
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n_stages(&self) -> usize {
        self.horizons.first().map_or(0, Vec::len)
    }

    pub fn stage(&self, n: usize) -> Vec<Stage> {
        self.horizons.iter().map(|h| h[n]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_stages();
        if n == 0 {
            return Err(FrameError::Precondition("schedule has no stages".into()));
        }
        for (t, h) in self.horizons.iter().enumerate() {
            if h.len() != n {
                return Err(FrameError::Precondition(format!(
                    "horizon {} has {} stages, expected {n}",
                    t + 1,
                    h.len()
                )));
            }
            for s in h {
                if s.j.is_nan() || s.j <= 0.0 || s.k == 0 || s.ell == 0 || s.m == 0 {
                    return Err(FrameError::Precondition(format!(
                        "stage entries must be positive: {s:?}"
                    )));
                }
            }
            if let Some(w) = h.windows(2).find(|w| !w[0].dominated_by(&w[1])) {
                return Err(FrameError::Precondition(format!(
                    "stages must be nondecreasing: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// Riemann sums `I^n(x, W_bar)` as a running path: on each block `[(i-1)/m, i/m)` the
/// staged integrand is frozen at the block start and multiplied with the Q-Wiener
/// increment accrued so far in that block.
///
/// `stages[T-1]` is used for times in `[T-1, T)`.
pub fn riemann_in(
    base: &dyn OperatorIntegrand,
    x: &dyn PathAccess,
    q_path: &QWienerPath,
    stages: &[Stage],
) -> Result<PathRecord> {
    let grid = *x.grid();
    grid.check_same(&q_path.grid)?;
    if q_path.modes() != base.modes() {
        return Err(FrameError::Dimension {
            context: "Q-Wiener modes",
            expected: base.modes(),
            found: q_path.modes(),
        });
    }
    let horizons = grid.t_end().ceil() as usize;
    if stages.len() < horizons {
        return Err(FrameError::Precondition(format!(
            "{} horizon stages given, {horizons} needed",
            stages.len()
        )));
    }
    let staged_ops = stages
        .iter()
        .take(horizons)
        .map(|s| staged(base, q_path.lambda().view(), *s, &grid))
        .collect::<Result<Vec<_>>>()?;
    if horizons > 1 && integer_ratio(1.0, grid.dt()).is_none() {
        return Err(FrameError::Commensurability {
            what: "horizon",
            value: 1.0,
            spacing: grid.dt(),
        });
    }
    let mut out = PathRecord::zeros(grid, base.out_dim(), 1.0);
    let mut acc = Array1::zeros(base.out_dim());
    let mut cached: Option<(usize, usize, Array2<f64>)> = None;
    for n in 0..grid.n_steps() {
        let horizon = (grid.floor_index(grid.time(n)) as f64 * grid.dt() + GRID_TOL).floor() as usize;
        let op = &staged_ops[horizon.min(horizons - 1)];
        let start = op.block_start(n);
        let op_matrix = match &cached {
            Some((h, s, m)) if *h == horizon && *s == start => m,
            _ => {
                let m = op.eval(n, &Refrozen::new(x, n));
                &cached.insert((horizon, start, m)).2
            }
        };
        acc += &op_matrix.dot(&q_path.increment(n, n + 1));
        out.states_mut().row_mut(n + 1).assign(&acc);
    }
    Ok(out)
}

/// Fine-grid reference `int b dW` with `b = b_bar o J` against the recovered driver.
pub fn reference_integral(
    base: &dyn OperatorIntegrand,
    x: &dyn PathAccess,
    q_path: &QWienerPath,
) -> Result<PathRecord> {
    let driver = recover_components(q_path)?;
    let sqrt_lambda = q_path.lambda().mapv(f64::sqrt);
    let integrand: Vec<Array2<f64>> = (0..x.grid().n_steps())
        .map(|i| base.eval(i, &Refrozen::new(x, i)) * &sqrt_lambda)
        .collect();
    discrete_ito(&integrand, &driver)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageError {
    pub stage: usize,
    pub quadruple: Stage,
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub stages: Vec<StageError>,
    pub nonincreasing: bool,
    pub final_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// How the window average treats times below zero.
    pub mollifier_convention: &'static str,
}

pub const MOLLIFIER_CONVENTION: &str = "zero extension for s < 0; sub-cell windows use the point value";

impl ConvergenceReport {
    fn from_errors(schedule: &ApproxSchedule, errors: Vec<f64>, tolerance: f64) -> Self {
        let stages: Vec<StageError> = errors
            .iter()
            .enumerate()
            .map(|(n, &e)| StageError {
                stage: n + 1,
                quadruple: schedule.horizons[0][n],
                sup_error: e,
            })
            .collect();
        let nonincreasing = errors.windows(2).all(|w| w[1] <= w[0]);
        let final_error = errors.last().copied().unwrap_or(f64::NAN);
        Self {
            pass: nonincreasing && final_error <= tolerance,
            stages,
            nonincreasing,
            final_error,
            tolerance,
            mollifier_convention: MOLLIFIER_CONVENTION,
        }
    }

    /// Stage-wise mean of several studies run with the same schedule.
    pub fn average(schedule: &ApproxSchedule, reports: &[ConvergenceReport], tolerance: f64) -> Self {
        let n = schedule.n_stages();
        let errors = (0..n)
            .map(|s| reports.iter().map(|r| r.stages[s].sup_error).sum::<f64>() / reports.len() as f64)
            .collect();
        Self::from_errors(schedule, errors, tolerance)
    }

    /// `stage,j,k,l,m,sup_error`; quadruples are those of the first horizon.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "stage,j,k,l,m,sup_error")?;
        for s in &self.stages {
            let q = s.quadruple;
            writeln!(out, "{},{},{},{},{},{:e}", s.stage, q.j, q.k, q.ell, q.m, s.sup_error)?;
        }
        Ok(())
    }
}

/// Sup-norm error of every stage of `schedule` against `reference`.
pub fn convergence_study(
    base: &dyn OperatorIntegrand,
    x: &dyn PathAccess,
    q_path: &QWienerPath,
    schedule: &ApproxSchedule,
    reference: &PathRecord,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    schedule.validate()?;
    let errors = (0..schedule.n_stages())
        .map(|n| riemann_in(base, x, q_path, &schedule.stage(n))?.sup_distance(reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::from_errors(schedule, errors, tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{associate_q_wiener, harmonic_embedding, sample_driver};
    use ndarray::array;

    fn setup(n: usize, modes: usize, stream: u64) -> (TimeGrid, PathRecord, QWienerPath) {
        let grid = TimeGrid::new(1.0, n).unwrap();
        let x = PathRecord::zeros(grid, modes, 1.0);
        let d = sample_driver(grid, modes, 21, stream).unwrap();
        let q = associate_q_wiener(&d, harmonic_embedding(modes).view()).unwrap();
        (grid, x, q)
    }

    fn constant(m: Array2<f64>) -> DeterministicIntegrand<impl Fn(f64) -> Array2<f64> + Sync> {
        let (r, c) = m.dim();
        DeterministicIntegrand::new(r, c, move |_| m.clone())
    }

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn truncation_indicator() {
        let (_, x, _) = setup(8, 2, 0);
        let lambda = array![1.0, 1.0];
        // HS norm = 2.5
        let b = constant(array![[1.5, 0.0], [0.0, 2.0]]);
        let v = x.full();
        assert_eq!(hs_truncate(&b, lambda.view(), f64::INFINITY).unwrap().eval(3, &v), b.eval(3, &v));
        assert_eq!(max_abs(&hs_truncate(&b, lambda.view(), 2.0).unwrap().eval(3, &v)), 0.0);
        assert_eq!(hs_truncate(&b, lambda.view(), 3.0).unwrap().eval(3, &v), b.eval(3, &v));
        assert_eq!(hs_truncate(&b, lambda.view(), 2.5).unwrap().eval(3, &v), b.eval(3, &v));
        assert_eq!(max_abs(&hs_truncate(&b, lambda.view(), 0.0).unwrap().eval(0, &v)), 0.0);
        let z = constant(Array2::zeros((2, 2)));
        assert_eq!(hs_truncate(&z, lambda.view(), 0.0).unwrap().eval(0, &v), Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn rank_truncation() {
        let (_, x, _) = setup(8, 2, 0);
        let v = x.full();
        let b = constant(array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(finite_rank(&b, 2).unwrap().eval(0, &v), b.eval(0, &v));
        assert_eq!(finite_rank(&b, 1).unwrap().eval(0, &v), array![[1.0, 0.0], [3.0, 0.0]]);
        assert!(finite_rank(&b, 3).is_err());
        let lambda = array![0.5, 0.25];
        let full = hs_norm(&b.eval(0, &v), lambda.view());
        let cut = hs_norm(&finite_rank(&b, 1).unwrap().eval(0, &v), lambda.view());
        assert!(cut < full);
    }

    #[test]
    fn mollifier_windows() {
        let (grid, x, _) = setup(64, 2, 0);
        let v = x.full();
        let m = array![[1.0, -2.0], [0.5, 3.0]];
        let b = constant(m.clone());
        let moll = time_mollify(&b, 4).unwrap();
        // window 1/4 = 16 cells
        for i in [16, 30, 64] {
            assert!(max_abs(&(moll.eval(i, &v) - &m)) < 1e-14);
        }
        for i in [0, 1, 5, 15] {
            let expect = &m * (grid.time(i) * 4.0);
            assert!(max_abs(&(moll.eval(i, &v) - expect)) < 1e-14, "i={i}");
        }
        // one-cell window: left-endpoint value
        let ramp = DeterministicIntegrand::new(1, 1, |t| array![[t]]);
        let one = time_mollify(&ramp, 64).unwrap();
        assert!((one.eval(10, &v)[[0, 0]] - grid.time(9)).abs() < 1e-14);
        let sub = time_mollify(&ramp, 1 << 20).unwrap();
        assert_eq!(sub.eval(10, &v)[[0, 0]], grid.time(10));
    }

    #[test]
    fn step_discretization() {
        let (grid, x, _) = setup(64, 1, 0);
        let v = x.full();
        let ramp = DeterministicIntegrand::new(1, 1, |t| array![[t]]);
        let fine = step_discretize(&ramp, 64, &grid).unwrap();
        for i in 0..=64 {
            assert_eq!(fine.eval(i, &v)[[0, 0]], grid.time(i));
        }
        let unit = step_discretize(&ramp, 1, &grid).unwrap();
        assert_eq!(unit.eval(grid.index_of(0.75).unwrap(), &v)[[0, 0]], 0.0);
        let quarter = step_discretize(&ramp, 4, &grid).unwrap();
        for block in 0..4 {
            let vals: Vec<f64> = (block * 16..(block + 1) * 16).map(|i| quarter.eval(i, &v)[[0, 0]]).collect();
            assert!(vals.iter().all(|&y| y == vals[0]));
        }
        assert!(matches!(step_discretize(&ramp, 3, &grid), Err(FrameError::Commensurability { .. })));
    }

    #[test]
    fn riemann_sum_reduces_to_discrete_ito() {
        let (_, x, q) = setup(64, 3, 5);
        let b = constant(array![[1.0, 0.3, 0.0], [0.0, -2.0, 0.1], [0.5, 0.0, 4.0]]);
        let v = x.full();
        let zero = constant(Array2::zeros((3, 3)));
        let z = riemann_in(&zero, &v, &q, &[Stage::new(1.0, 3, 1, 1)]).unwrap();
        assert!(z.states().iter().all(|&y| y == 0.0));

        let got = riemann_in(&b, &v, &q, &[Stage::new(f64::INFINITY, 3, u64::MAX, 64)]).unwrap();
        let reference = reference_integral(&b, &v, &q).unwrap();
        assert!(got.sup_distance(&reference).unwrap() < 1e-12);
    }

    #[test]
    fn coarser_blocks_cost_order_one_over_m() {
        let (_, x, q) = setup(256, 2, 3);
        let v = x.full();
        let b = DeterministicIntegrand::new(2, 2, |t| array![[(2.0 * t).cos(), 0.0], [t, (-t).exp()]]);
        let reference = reference_integral(&b, &v, &q).unwrap();
        let err = |m: u64| {
            riemann_in(&b, &v, &q, &[Stage::new(f64::INFINITY, 2, u64::MAX, m)])
                .unwrap()
                .sup_distance(&reference)
                .unwrap()
        };
        let (e16, e8) = (err(16), err(8));
        assert!(e16 < e8 && e8 < 0.5, "e8 {e8} e16 {e16}");
    }

    #[test]
    fn saturated_schedule_has_flat_errors() {
        let (grid, x, q) = setup(64, 2, 1);
        let v = x.full();
        let b = DeterministicIntegrand::new(2, 2, |t| array![[1.0 + t, 0.0], [0.0, 1.0]]);
        let reference = reference_integral(&b, &v, &q).unwrap();
        let top = Stage::new(f64::INFINITY, 2, u64::MAX, 64);
        let sched = ApproxSchedule::uniform(vec![top; 3], 1).unwrap();
        let rep = convergence_study(&b, &v, &q, &sched, &reference, 1e-9).unwrap();
        assert!(rep.stages.iter().all(|s| s.sup_error == rep.stages[0].sup_error));
        assert!(rep.pass);
        // k beyond K is clamped to K
        let over = riemann_in(&b, &v, &q, &[Stage::new(f64::INFINITY, 5, u64::MAX, 64)]).unwrap();
        let at = riemann_in(&b, &v, &q, &[top]).unwrap();
        assert_eq!(over, at);
        let _ = grid;
    }

    #[test]
    fn schedule_validation() {
        assert!(ApproxSchedule::uniform(vec![Stage::new(2.0, 2, 8, 8), Stage::new(1.0, 2, 8, 8)], 1).is_err());
        assert!(ApproxSchedule::uniform(vec![Stage::new(2.0, 0, 8, 8)], 1).is_err());
        assert!(ApproxSchedule::uniform(vec![], 1).is_err());
        assert!(ApproxSchedule::uniform(vec![Stage::new(1.0, 1, 1, 1), Stage::new(2.0, 2, 8, 8)], 2).is_ok());
    }

    #[test]
    fn csv_header() {
        let rep = ConvergenceReport::from_errors(
            &ApproxSchedule::uniform(vec![Stage::new(1.0, 1, 2, 2)], 1).unwrap(),
            vec![0.5],
            0.1,
        );
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "stage,j,k,l,m,sup_error\n1,1,1,2,2,5e-1\n");
        assert!(!rep.pass);
    }
}
