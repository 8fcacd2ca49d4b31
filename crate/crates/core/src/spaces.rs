//! Finite truncations of the state spaces and of the path space.
//!
//! States are plain `Array1<f64>` vectors. A vector lives either in a
//! truncated sequence space (Euclidean inner product) or on a uniform
//! spatial grid (inner product `h * sum f_i g_i`); the distinction is carried
//! by a scalar cell weight so that both kinds share one path type.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, CowArray, Ix1};
use serde::{Deserialize, Serialize};

use crate::error::{FrameError, Result};

/// Relative tolerance used when deciding whether a real number sits on a grid.
pub(crate) const GRID_TOL: f64 = 1e-9;

/// A truncated element of the sequence space: mode amplitudes `h_1..h_N`.
pub type StateVector = Array1<f64>;

/// Returns `Some(n)` when `value / spacing` is within tolerance of the integer `n`.
pub(crate) fn integer_ratio(value: f64, spacing: f64) -> Option<i64> {
    let ratio = value / spacing;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= GRID_TOL * rounded.abs().max(1.0) {
        Some(rounded as i64)
    } else {
        None
    }
}

pub fn euclidean_norm(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Uniform time grid `t_i = i * dt`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(FrameError::Range {
                what: "t_end",
                value: t_end,
                range: "(0, inf)".into(),
            });
        }
        if n_steps == 0 {
            return Err(FrameError::Range {
                what: "n_steps",
                value: 0.0,
                range: "[1, inf)".into(),
            });
        }
        Ok(Self { t_end, n_steps })
    }

    /// Grid on `[0, t_end]` with step `dt`, which must divide `t_end`.
    pub fn with_step(t_end: f64, dt: f64) -> Result<Self> {
        let n = integer_ratio(t_end, dt).filter(|&n| n > 0).ok_or(
            FrameError::Commensurability {
                what: "t_end",
                value: t_end,
                spacing: dt,
            },
        )?;
        Self::new(t_end, n as usize)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    /// Index of the grid point equal to `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        match integer_ratio(t, self.dt()) {
            Some(i) if i >= 0 && i as usize <= self.n_steps => Ok(i as usize),
            _ => Err(FrameError::OffGrid(t)),
        }
    }

    /// Index of the last grid point `t_i <= t` (clamped to the grid).
    pub fn floor_index(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let r = t / self.dt();
        let i = (r + GRID_TOL * r.max(1.0)).floor() as usize;
        i.min(self.n_steps)
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps
            && (self.t_end - other.t_end).abs() <= GRID_TOL * self.t_end.max(1.0)
    }

    pub(crate) fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(FrameError::GridMismatch(format!(
                "[0, {}] with {} steps vs [0, {}] with {} steps",
                self.t_end, self.n_steps, other.t_end, other.n_steps
            )))
        }
    }
}

/// Uniform spatial grid on `[x_min, x_max]` with spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    h: f64,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(FrameError::Range {
                what: "h",
                value: h,
                range: "(0, inf)".into(),
            });
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(FrameError::Window(format!(
                "empty window [{x_min}, {x_max}]"
            )));
        }
        integer_ratio(x_max - x_min, h).ok_or(FrameError::Commensurability {
            what: "x_max - x_min",
            value: x_max - x_min,
            spacing: h,
        })?;
        Ok(Self { x_min, x_max, h })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_points(&self) -> usize {
        integer_ratio(self.x_max - self.x_min, self.h).unwrap_or(0) as usize + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    /// Number of grid cells covered by a displacement `t`; errors if `t/h` is not integral.
    pub fn cells(&self, t: f64) -> Result<i64> {
        integer_ratio(t, self.h).ok_or(FrameError::Commensurability {
            what: "t",
            value: t,
            spacing: self.h,
        })
    }
}

/// A function sampled on a [`SpatialGrid`], standing in for an element of `L^2(R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: SpatialGrid,
    pub values: Array1<f64>,
}

impl GridFunction {
    pub fn new(grid: SpatialGrid, values: Array1<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(FrameError::Dimension {
                context: "grid function",
                expected: grid.n_points(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        Self { grid, values }
    }

    pub fn inner(&self, other: &GridFunction) -> f64 {
        self.grid.h * self.values.dot(&other.values)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

/// A time-gridded path; row `i` holds the state at `t_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    grid: TimeGrid,
    /// Inner-product weight per coordinate: 1 for sequence spaces, `h` for gridded functions.
    weight: f64,
    states: Array2<f64>,
}

impl PathRecord {
    pub fn zeros(grid: TimeGrid, dim: usize, weight: f64) -> Self {
        Self {
            grid,
            weight,
            states: Array2::zeros((grid.n_points(), dim)),
        }
    }

    pub fn constant(grid: TimeGrid, state: ArrayView1<'_, f64>, weight: f64) -> Self {
        let mut p = Self::zeros(grid, state.len(), weight);
        for mut row in p.states.rows_mut() {
            row.assign(&state);
        }
        p
    }

    pub fn from_states(grid: TimeGrid, states: Array2<f64>, weight: f64) -> Result<Self> {
        if states.nrows() != grid.n_points() {
            return Err(FrameError::Dimension {
                context: "path length",
                expected: grid.n_points(),
                found: states.nrows(),
            });
        }
        if states.ncols() == 0 {
            return Err(FrameError::Precondition("state dimension must be >= 1".into()));
        }
        Ok(Self {
            grid,
            weight,
            states,
        })
    }

    pub fn from_fn(
        grid: TimeGrid,
        dim: usize,
        weight: f64,
        f: impl Fn(f64) -> Array1<f64>,
    ) -> Self {
        let mut p = Self::zeros(grid, dim, weight);
        for i in 0..grid.n_points() {
            p.states.row_mut(i).assign(&f(grid.time(i)));
        }
        p
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    pub fn state(&self, i: usize) -> ArrayView1<'_, f64> {
        self.states.row(i)
    }

    pub fn states(&self) -> ArrayView2<'_, f64> {
        self.states.view()
    }

    pub fn states_mut(&mut self) -> &mut Array2<f64> {
        &mut self.states
    }

    pub fn into_states(self) -> Array2<f64> {
        self.states
    }

    /// Coordinate `c` along the path.
    pub fn coordinate(&self, c: usize) -> ArrayView1<'_, f64> {
        self.states.column(c)
    }

    pub fn norm_of(&self, v: ArrayView1<'_, f64>) -> f64 {
        (self.weight * v.dot(&v)).sqrt()
    }

    /// `sup_i ||self(t_i) - other(t_i)||` over the whole grid.
    pub fn sup_distance(&self, other: &PathRecord) -> Result<f64> {
        self.check_compatible(other)?;
        Ok((0..self.len())
            .map(|i| self.norm_of((&self.state(i) - &other.state(i)).view()))
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_compatible(&self, other: &PathRecord) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.dim() != other.dim() {
            return Err(FrameError::Dimension {
                context: "path state dimension",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// View of this path frozen at index `last`.
    pub fn frozen(&self, last: usize) -> FrozenPath<'_> {
        FrozenPath {
            path: self,
            last: last.min(self.grid.n_steps()),
        }
    }

    pub fn full(&self) -> FrozenPath<'_> {
        self.frozen(self.grid.n_steps())
    }
}

/// Read access to a path as seen at a fixed time: every index beyond
/// [`PathAccess::last`] returns the state at `last`.
pub trait PathAccess {
    fn grid(&self) -> &TimeGrid;
    fn dim(&self) -> usize;
    fn last(&self) -> usize;
    fn state(&self, i: usize) -> CowArray<'_, f64, Ix1>;

    fn current(&self) -> CowArray<'_, f64, Ix1> {
        self.state(self.last())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FrozenPath<'a> {
    path: &'a PathRecord,
    last: usize,
}

impl PathAccess for FrozenPath<'_> {
    fn grid(&self) -> &TimeGrid {
        &self.path.grid
    }

    fn dim(&self) -> usize {
        self.path.dim()
    }

    fn last(&self) -> usize {
        self.last
    }

    fn state(&self, i: usize) -> CowArray<'_, f64, Ix1> {
        CowArray::from(self.path.state(i.min(self.last)))
    }
}

/// Any path view re-frozen at an earlier index.
pub struct Refrozen<'a> {
    inner: &'a dyn PathAccess,
    last: usize,
}

impl<'a> Refrozen<'a> {
    pub fn new(inner: &'a dyn PathAccess, last: usize) -> Self {
        Self {
            inner,
            last: last.min(inner.last()),
        }
    }
}

impl PathAccess for Refrozen<'_> {
    fn grid(&self) -> &TimeGrid {
        self.inner.grid()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn last(&self) -> usize {
        self.last
    }

    fn state(&self, i: usize) -> CowArray<'_, f64, Ix1> {
        self.inner.state(i.min(self.last))
    }
}

/// Materializes any path view into an owned record (indices past `last` repeat the frozen state).
pub fn materialize(view: &dyn PathAccess, weight: f64) -> PathRecord {
    let grid = *view.grid();
    let mut out = PathRecord::zeros(grid, view.dim(), weight);
    for i in 0..grid.n_points() {
        out.states.row_mut(i).assign(&view.state(i));
    }
    out
}

/// Truncated Frechet metric on sampled paths:
/// `sum_{k=1}^{k_max} 2^{-k} (max_{t_i <= k} ||w1(t_i) - w2(t_i)|| min 1)`.
///
/// The neglected tail is at most `2^{-k_max}`.
pub fn path_metric_rho(w1: &PathRecord, w2: &PathRecord, k_max: usize) -> Result<f64> {
    w1.check_compatible(w2)?;
    if k_max == 0 {
        return Err(FrameError::Range {
            what: "k_max",
            value: 0.0,
            range: "[1, t_end]".into(),
        });
    }
    let grid = w1.grid();
    if k_max as f64 > grid.t_end() * (1.0 + GRID_TOL) {
        return Err(FrameError::Range {
            what: "k_max",
            value: k_max as f64,
            range: format!("[1, {}]", grid.t_end()),
        });
    }
    let dists: Vec<f64> = (0..w1.len())
        .map(|i| w1.norm_of((&w1.state(i) - &w2.state(i)).view()))
        .collect();
    let mut total = 0.0;
    let mut running_sup = 0.0_f64;
    let mut i = 0;
    for k in 1..=k_max {
        let last = grid.floor_index(k as f64);
        while i <= last {
            running_sup = running_sup.max(dists[i]);
            i += 1;
        }
        total += 0.5_f64.powi(k as i32) * running_sup.min(1.0);
    }
    Ok(total)
}

/// Returns the path equal to `w` on `[0, t]` and constant at `w(t)` afterwards.
pub fn prefix_freeze(w: &PathRecord, t: f64) -> Result<PathRecord> {
    let i = w.grid().index_of(t)?;
    Ok(freeze_at(w, i))
}

pub fn freeze_at(w: &PathRecord, i: usize) -> PathRecord {
    let mut out = w.clone();
    let frozen = w.state(i).to_owned();
    for j in (i + 1)..w.len() {
        out.states.row_mut(j).assign(&frozen);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn norms() {
        assert_eq!(euclidean_norm(Array1::zeros(8).view()), 0.0);
        let mut e1 = Array1::zeros(8);
        e1[0] = 1.0;
        assert_eq!(euclidean_norm(e1.view()), 1.0);
        let g = SpatialGrid::new(0.0, 1.0, 0.25).unwrap();
        let f = GridFunction::from_fn(g, |_| 1.0);
        assert_eq!(f.values.len(), 5);
        assert!((f.norm() - 1.25_f64.sqrt()).abs() < 1e-15);
        assert!((f.norm() - 1.1180).abs() < 1e-4);
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(-1.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(SpatialGrid::new(0.0, 1.0, 0.3).is_err());
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(g.index_of(0.5).unwrap(), 2);
        assert!(g.index_of(0.3).is_err());
        assert_eq!(g.floor_index(0.6), 2);
        assert_eq!(TimeGrid::with_step(1.0, 0.25).unwrap().n_steps(), 4);
    }

    #[test]
    fn rho_of_constant_offset() {
        let grid = TimeGrid::new(20.0, 40).unwrap();
        let zero = PathRecord::zeros(grid, 2, 1.0);
        let c = PathRecord::constant(grid, array![0.3, 0.4].view(), 1.0);
        let rho = path_metric_rho(&zero, &c, 20).unwrap();
        assert!((rho - 0.5 * (1.0 - 2f64.powi(-20))).abs() < 1e-15);
        assert_eq!(path_metric_rho(&c, &c, 20).unwrap(), 0.0);
    }

    #[test]
    fn rho_rejects_mismatch() {
        let a = PathRecord::zeros(TimeGrid::new(2.0, 4).unwrap(), 2, 1.0);
        let b = PathRecord::zeros(TimeGrid::new(2.0, 8).unwrap(), 2, 1.0);
        assert!(matches!(
            path_metric_rho(&a, &b, 1),
            Err(FrameError::GridMismatch(_))
        ));
        let c = PathRecord::zeros(TimeGrid::new(2.0, 4).unwrap(), 3, 1.0);
        assert!(matches!(
            path_metric_rho(&a, &c, 1),
            Err(FrameError::Dimension { .. })
        ));
        assert!(path_metric_rho(&a, &a, 3).is_err());
    }

    #[test]
    fn freeze_examples() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let w = PathRecord::from_fn(grid, 2, 1.0, |t| array![t, 0.0]);
        assert_eq!(prefix_freeze(&w, 1.0).unwrap(), w);
        let at0 = prefix_freeze(&w, 0.0).unwrap();
        assert!(at0.coordinate(0).iter().all(|&x| x == 0.0));
        let half = prefix_freeze(&w, 0.5).unwrap();
        for i in 0..=10 {
            assert!((half.state(i)[0] - grid.time(i).min(0.5)).abs() < 1e-15);
        }
        assert!(matches!(prefix_freeze(&w, 0.55), Err(FrameError::OffGrid(_))));
    }

    fn path_strategy() -> impl Strategy<Value = PathRecord> {
        proptest::collection::vec(-3.0..3.0f64, 9 * 2).prop_map(|v| {
            let grid = TimeGrid::new(4.0, 8).unwrap();
            PathRecord::from_states(grid, Array2::from_shape_vec((9, 2), v).unwrap(), 1.0)
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn rho_is_a_bounded_pseudometric(a in path_strategy(), b in path_strategy(), c in path_strategy()) {
            let ab = path_metric_rho(&a, &b, 4).unwrap();
            let ba = path_metric_rho(&b, &a, 4).unwrap();
            let bc = path_metric_rho(&b, &c, 4).unwrap();
            let ac = path_metric_rho(&a, &c, 4).unwrap();
            prop_assert_eq!(path_metric_rho(&a, &a, 4).unwrap(), 0.0);
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(ab <= 1.0);
        }
    }
}
