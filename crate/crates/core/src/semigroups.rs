//! Diagonal contraction semigroups, the translation group on a gridded line, and an
//! explicit unitary dilation of a diagonal semigroup.
//!
//! The dilation puts every mode `k` on its own copy of the gridded line. The
//! embedding sends `e_k` to the profile `f_k(x) = c_k e^{lambda_k x} 1_{x<0}`
//! (normalized in the discrete norm), the group acts by left translation
//! `(U_t g)(x) = g(x + t)` and the projection is the discrete adjoint of the
//! embedding. On a uniform grid the scalar `<f_k, U_t f_k>` telescopes to
//! `e^{-lambda_k t}` up to the mass of `f_k` pushed out through the left edge
//! of the window; the resulting error is at most `e^{lambda_k (2 x_min + t)}`.

use ndarray::{s, Array1, ArrayView1};
use serde::Serialize;

use crate::error::{FrameError, Result};
use crate::spaces::{integer_ratio, GridFunction, SpatialGrid, GRID_TOL};

/// A strongly continuous semigroup acting on flat state vectors.
pub trait Semigroup {
    fn dim(&self) -> usize;
    /// Inner-product weight of the state space (see [`crate::spaces::PathRecord`]).
    fn weight(&self) -> f64;
    fn apply(&self, t: f64, v: ArrayView1<'_, f64>) -> Result<Array1<f64>>;
}

/// `S_t h = (e^{-lambda_k t} h_k)_k`, generator `A = diag(-lambda_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalSemigroup {
    rates: Array1<f64>,
}

impl DiagonalSemigroup {
    pub fn new(rates: Array1<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(FrameError::Precondition("at least one mode required".into()));
        }
        if let Some(&bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(FrameError::Range {
                what: "rate",
                value: bad,
                range: "(0, inf)".into(),
            });
        }
        Ok(Self { rates })
    }

    /// Rates `lambda_k = k`, i.e. `A h = (-k h_k)`.
    pub fn harmonic(modes: usize) -> Self {
        Self {
            rates: Array1::from_shape_fn(modes.max(1), |k| (k + 1) as f64),
        }
    }

    pub fn rates(&self) -> &Array1<f64> {
        &self.rates
    }

    /// Generator applied to `v`.
    pub fn generator(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        -&self.rates * v
    }

    pub fn apply_diag(&self, t: f64, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if t < 0.0 {
            return Err(FrameError::NegativeTime(t));
        }
        if v.len() != self.rates.len() {
            return Err(FrameError::Dimension {
                context: "diagonal semigroup",
                expected: self.rates.len(),
                found: v.len(),
            });
        }
        Ok(Array1::from_shape_fn(v.len(), |k| {
            (-self.rates[k] * t).exp() * v[k]
        }))
    }
}

impl Semigroup for DiagonalSemigroup {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn weight(&self) -> f64 {
        1.0
    }

    fn apply(&self, t: f64, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.apply_diag(t, v)
    }
}

/// `(out)[i] = v[i + cells]`, zero where the source index leaves the window.
fn shift_into(v: ArrayView1<'_, f64>, cells: i64, mut out: ndarray::ArrayViewMut1<'_, f64>) {
    let n = v.len() as i64;
    out.fill(0.0);
    let lo = (-cells).max(0);
    let hi = (n - cells).min(n);
    if lo < hi {
        out.slice_mut(s![lo as usize..hi as usize])
            .assign(&v.slice(s![(lo + cells) as usize..(hi + cells) as usize]));
    }
}

/// `U_t h = h(t + .)` on a finite window, zero-filled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranslationGroup {
    pub grid: SpatialGrid,
}

impl TranslationGroup {
    pub fn new(grid: SpatialGrid) -> Self {
        Self { grid }
    }

    pub fn shift_values(&self, t: f64, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if v.len() != self.grid.n_points() {
            return Err(FrameError::Dimension {
                context: "translation group",
                expected: self.grid.n_points(),
                found: v.len(),
            });
        }
        let cells = self.grid.cells(t)?;
        let mut out = Array1::zeros(v.len());
        shift_into(v, cells, out.view_mut());
        Ok(out)
    }

    pub fn apply_translation(&self, t: f64, f: &GridFunction) -> Result<GridFunction> {
        if f.grid != self.grid {
            return Err(FrameError::Precondition(
                "grid function lives on a different window".into(),
            ));
        }
        GridFunction::new(self.grid, self.shift_values(t, f.values.view())?)
    }
}

impl Semigroup for TranslationGroup {
    fn dim(&self) -> usize {
        self.grid.n_points()
    }

    fn weight(&self) -> f64 {
        self.grid.h()
    }

    fn apply(&self, t: f64, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.shift_values(t, v)
    }
}

/// The triple (embedding, projection, group) with `pi U_t l = S_t`.
///
/// Vectors of the small space `H` and of the big space are flat arrays; their
/// inner products carry the weights [`Dilation::base_weight`] and
/// [`Dilation::big_weight`].
pub trait Dilation: Sync {
    fn base_dim(&self) -> usize;
    fn big_dim(&self) -> usize;
    fn base_weight(&self) -> f64;
    fn big_weight(&self) -> f64;
    /// Number of grid cells of a group displacement `t`.
    fn cells(&self, t: f64) -> Result<i64>;
    /// `U_t` for `t = cells * h`.
    fn shift_cells(&self, cells: i64, g: ArrayView1<'_, f64>) -> Array1<f64>;
    fn embed(&self, v: ArrayView1<'_, f64>) -> Array1<f64>;
    fn project(&self, g: ArrayView1<'_, f64>) -> Array1<f64>;

    fn shift(&self, t: f64, g: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        Ok(self.shift_cells(self.cells(t)?, g))
    }

    /// `pi U_t g`.
    fn project_shifted_cells(&self, cells: i64, g: ArrayView1<'_, f64>) -> Array1<f64> {
        self.project(self.shift_cells(cells, g).view())
    }

    /// `U_t l v`.
    fn embed_shifted_cells(&self, cells: i64, v: ArrayView1<'_, f64>) -> Array1<f64> {
        self.shift_cells(cells, self.embed(v).view())
    }

    fn big_inner(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        self.big_weight() * a.dot(&b)
    }

    fn big_norm(&self, a: ArrayView1<'_, f64>) -> f64 {
        self.big_inner(a, a).sqrt()
    }

    fn base_norm(&self, v: ArrayView1<'_, f64>) -> f64 {
        (self.base_weight() * v.dot(&v)).sqrt()
    }

    /// Cells per time step of `dt`; errors unless `dt` is a multiple of `h`.
    fn cells_per_step(&self, dt: f64) -> Result<i64> {
        match self.cells(dt) {
            Ok(c) if c > 0 => Ok(c),
            _ => Err(FrameError::Commensurability {
                what: "dt",
                value: dt,
                spacing: self.spacing(),
            }),
        }
    }

    fn spacing(&self) -> f64;

    /// Errors when transport up to `t_end` would push mass out of the right edge.
    fn check_horizon(&self, t_end: f64) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeWindow {
    /// Offset of this mode's block inside a big-space vector.
    pub offset: usize,
    pub len: usize,
    pub x_min: f64,
    /// Bound `e^{lambda_k (2 x_min + x_max)}` on the diagram error of this mode for `t <= x_max`.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationFrame {
    rates: Array1<f64>,
    h: f64,
    x_max: f64,
    windows: Vec<ModeWindow>,
    profiles: Vec<Array1<f64>>,
    big_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSummary {
    pub rates: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub h: f64,
    pub big_dim: usize,
    pub modes: Vec<ModeWindow>,
}

/// Builds the dilation frame of `diag(e^{-rates_k t})` on the window `grid`.
///
/// `grid.x_min()` must be far enough left that `e^{2 lambda_min x_min} <= tail_tol`.
/// Faster modes keep only the left part of the window needed to match the
/// slowest mode's error bound over horizons up to `x_max`, so their blocks are shorter.
pub fn build_dilation(rates: ArrayView1<'_, f64>, grid: &SpatialGrid, tail_tol: f64) -> Result<DilationFrame> {
    let sg = DiagonalSemigroup::new(rates.to_owned())?;
    let h = grid.h();
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(FrameError::Range {
            what: "tail_tol",
            value: tail_tol,
            range: "(0, 1)".into(),
        });
    }
    if grid.x_min() >= 0.0 || grid.x_max() < 0.0 {
        return Err(FrameError::Window(format!(
            "window [{}, {}] must contain 0 with x_min < 0",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let left_cells = integer_ratio(-grid.x_min(), h).ok_or(FrameError::Commensurability {
        what: "x_min",
        value: grid.x_min(),
        spacing: h,
    })?;
    let right_cells = integer_ratio(grid.x_max(), h).ok_or(FrameError::Commensurability {
        what: "x_max",
        value: grid.x_max(),
        spacing: h,
    })?;
    let lambda_min = sg.rates().iter().copied().fold(f64::INFINITY, f64::min);
    let worst = (2.0 * lambda_min * grid.x_min()).exp();
    if worst > tail_tol {
        return Err(FrameError::Window(format!(
            "x_min = {} leaves tail e^(2*{lambda_min}*x_min) = {worst:.3e} above {tail_tol:.1e}",
            grid.x_min()
        )));
    }
    let mut windows = Vec::with_capacity(rates.len());
    let mut profiles = Vec::with_capacity(rates.len());
    let mut offset = 0;
    for &lambda in sg.rates() {
        // keep only as much of the window as the slowest mode's error bound at t = x_max requires
        let x_needed = (lambda_min * (2.0 * grid.x_min() + grid.x_max()) / lambda - grid.x_max()) / 2.0;
        let needed = (-x_needed / h - GRID_TOL).ceil() as i64;
        let left = needed.clamp(1, left_cells);
        let x_min = -(left as f64) * h;
        let len = (left + right_cells) as usize + 1;
        let mut profile = Array1::from_shape_fn(len, |i| {
            let x = x_min + i as f64 * h;
            if (i as i64) < left {
                (lambda * x).exp()
            } else {
                0.0
            }
        });
        let norm = (h * profile.dot(&profile)).sqrt();
        profile /= norm;
        windows.push(ModeWindow {
            offset,
            len,
            x_min,
            tail_bound: (lambda * (2.0 * x_min + grid.x_max())).exp(),
        });
        profiles.push(profile);
        offset += len;
    }
    Ok(DilationFrame {
        rates: sg.rates,
        h,
        x_max: grid.x_max(),
        windows,
        profiles,
        big_dim: offset,
    })
}

impl DilationFrame {
    pub fn rates(&self) -> &Array1<f64> {
        &self.rates
    }

    pub fn windows(&self) -> &[ModeWindow] {
        &self.windows
    }

    /// Embedding column `l e_k` as a function on the mode's window.
    pub fn profile(&self, k: usize) -> Result<GridFunction> {
        let w = &self.windows[k];
        let grid = SpatialGrid::new(w.x_min, self.x_max, self.h)?;
        GridFunction::new(grid, self.profiles[k].clone())
    }

    pub fn summary(&self) -> FrameSummary {
        FrameSummary {
            rates: self.rates.to_vec(),
            x_min: self.windows.iter().map(|w| w.x_min).fold(0.0, f64::min),
            x_max: self.x_max,
            h: self.h,
            big_dim: self.big_dim,
            modes: self.windows.clone(),
        }
    }

    fn block<'a>(&self, g: &'a ArrayView1<'_, f64>, k: usize) -> ArrayView1<'a, f64> {
        let w = &self.windows[k];
        g.slice(s![w.offset..w.offset + w.len])
    }

    /// Mode-`k` component of `pi U_t g` for `t = cells * h`, computed without forming `U_t g`.
    fn project_block_shifted(&self, k: usize, cells: i64, g: &ArrayView1<'_, f64>) -> f64 {
        let block = self.block(g, k);
        let f = &self.profiles[k];
        let n = f.len() as i64;
        let lo = (-cells).max(0);
        let hi = (n - cells).min(n);
        if lo >= hi {
            return 0.0;
        }
        let a = f.slice(s![lo as usize..hi as usize]);
        let b = block.slice(s![(lo + cells) as usize..(hi + cells) as usize]);
        self.h * a.dot(&b)
    }
}

impl Dilation for DilationFrame {
    fn base_dim(&self) -> usize {
        self.rates.len()
    }

    fn big_dim(&self) -> usize {
        self.big_dim
    }

    fn base_weight(&self) -> f64 {
        1.0
    }

    fn big_weight(&self) -> f64 {
        self.h
    }

    fn spacing(&self) -> f64 {
        self.h
    }

    fn cells(&self, t: f64) -> Result<i64> {
        integer_ratio(t, self.h).ok_or(FrameError::Commensurability {
            what: "t",
            value: t,
            spacing: self.h,
        })
    }

    fn shift_cells(&self, cells: i64, g: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.big_dim);
        for w in &self.windows {
            shift_into(
                g.slice(s![w.offset..w.offset + w.len]),
                cells,
                out.slice_mut(s![w.offset..w.offset + w.len]),
            );
        }
        out
    }

    fn embed(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        self.embed_shifted_cells(0, v)
    }

    fn project(&self, g: ArrayView1<'_, f64>) -> Array1<f64> {
        self.project_shifted_cells(0, g)
    }

    fn project_shifted_cells(&self, cells: i64, g: ArrayView1<'_, f64>) -> Array1<f64> {
        Array1::from_shape_fn(self.rates.len(), |k| self.project_block_shifted(k, cells, &g))
    }

    fn embed_shifted_cells(&self, cells: i64, v: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.big_dim);
        for (k, w) in self.windows.iter().enumerate() {
            let mut block = out.slice_mut(s![w.offset..w.offset + w.len]);
            shift_into(self.profiles[k].view(), cells, block.view_mut());
            block *= v[k];
        }
        out
    }

    fn check_horizon(&self, t_end: f64) -> Result<()> {
        if self.x_max + 1e-12 < t_end {
            return Err(FrameError::Window(format!(
                "x_max = {} is left of the horizon t_end = {t_end}",
                self.x_max
            )));
        }
        Ok(())
    }
}

/// The group case: the big space is the state space itself, `l = pi = I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupFrame {
    pub group: TranslationGroup,
}

impl Dilation for GroupFrame {
    fn base_dim(&self) -> usize {
        self.group.grid.n_points()
    }

    fn big_dim(&self) -> usize {
        self.group.grid.n_points()
    }

    fn base_weight(&self) -> f64 {
        self.group.grid.h()
    }

    fn big_weight(&self) -> f64 {
        self.group.grid.h()
    }

    fn spacing(&self) -> f64 {
        self.group.grid.h()
    }

    fn cells(&self, t: f64) -> Result<i64> {
        self.group.grid.cells(t)
    }

    fn shift_cells(&self, cells: i64, g: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut out = Array1::zeros(g.len());
        shift_into(g, cells, out.view_mut());
        out
    }

    fn embed(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        v.to_owned()
    }

    fn project(&self, g: ArrayView1<'_, f64>) -> Array1<f64> {
        g.to_owned()
    }

    fn check_horizon(&self, _t_end: f64) -> Result<()> {
        Ok(())
    }
}

/// `max_{t, k} || pi U_t l e_k - e^{-lambda_k t} e_k ||`.
pub fn dilation_diagram_error(frame: &DilationFrame, t_list: &[f64], k_list: &[usize]) -> Result<f64> {
    let n = frame.base_dim();
    let mut worst = 0.0_f64;
    for &t in t_list {
        let cells = frame.cells(t)?;
        for &k in k_list {
            if k >= n {
                return Err(FrameError::Range {
                    what: "mode index",
                    value: k as f64,
                    range: format!("[0, {n})"),
                });
            }
            let mut e = Array1::zeros(n);
            e[k] = 1.0;
            let lifted = frame.embed(e.view());
            let mut got = frame.project_shifted_cells(cells, lifted.view());
            got[k] -= (-frame.rates[k] * t).exp();
            worst = worst.max(got.dot(&got).sqrt());
        }
    }
    Ok(worst)
}
