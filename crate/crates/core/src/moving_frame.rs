//! Transport between the SPDE on `H` and the SDE on the dilation space.
//!
//! With a dilation `(l, pi, U)` the drift and volatility of the SPDE are pulled
//! into the moving frame, `a(t, w) = U_{-t} l alpha(t, w)`, and paths are mapped
//! back by `Gamma(w)(t) = pi U_t (w(t) - Pi_2 w(0))`, where `Pi_2 = I - l pi`
//! projects onto the kernel of `pi`.

use ndarray::{Array1, Array2, ArrayView1, CowArray, Ix1};

use crate::error::{FrameError, Result};
use crate::noise::DriverBundle;
use crate::semigroups::Dilation;
use crate::spaces::{freeze_at, PathAccess, PathRecord, TimeGrid};

/// Drift and volatility of a path-dependent equation.
///
/// `alpha(i, w)` and `sigma(i, w)` are evaluated at `t_i`; `sigma` returns a
/// `state_dim x noise_dim` matrix whose column `j` is the image of the `j`-th
/// driver mode. Implementations must be adapted: they may read `w` only up to
/// index `i`. [`check_adapted`] tests this on sample paths.
pub trait CoefficientPair: Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    /// Inner-product weight of the state space.
    fn weight(&self) -> f64 {
        1.0
    }
    fn alpha(&self, i: usize, w: &dyn PathAccess) -> Array1<f64>;
    fn sigma(&self, i: usize, w: &dyn PathAccess) -> Array2<f64>;
}

/// Coefficients depending on the current state only, `alpha(t, x)` and `sigma(t, x)`.
pub trait StateCoefficients: Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn weight(&self) -> f64 {
        1.0
    }
    fn alpha_at(&self, t: f64, x: ArrayView1<'_, f64>) -> Array1<f64>;
    fn sigma_at(&self, t: f64, x: ArrayView1<'_, f64>) -> Array2<f64>;
}

impl<C: StateCoefficients> CoefficientPair for C {
    fn state_dim(&self) -> usize {
        StateCoefficients::state_dim(self)
    }

    fn noise_dim(&self) -> usize {
        StateCoefficients::noise_dim(self)
    }

    fn weight(&self) -> f64 {
        StateCoefficients::weight(self)
    }

    fn alpha(&self, i: usize, w: &dyn PathAccess) -> Array1<f64> {
        self.alpha_at(w.grid().time(i), w.state(i).view())
    }

    fn sigma(&self, i: usize, w: &dyn PathAccess) -> Array2<f64> {
        self.sigma_at(w.grid().time(i), w.state(i).view())
    }
}

type StateFn = dyn Fn(f64, ArrayView1<'_, f64>) -> Array1<f64> + Send + Sync;
type OperatorFn = dyn Fn(f64, ArrayView1<'_, f64>) -> Array2<f64> + Send + Sync;

/// State-dependent coefficients from closures.
pub struct FnCoefficients {
    pub state_dim: usize,
    pub noise_dim: usize,
    pub weight: f64,
    alpha: Box<StateFn>,
    sigma: Box<OperatorFn>,
}

impl FnCoefficients {
    pub fn new(
        state_dim: usize,
        noise_dim: usize,
        alpha: impl Fn(f64, ArrayView1<'_, f64>) -> Array1<f64> + Send + Sync + 'static,
        sigma: impl Fn(f64, ArrayView1<'_, f64>) -> Array2<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            state_dim,
            noise_dim,
            weight: 1.0,
            alpha: Box::new(alpha),
            sigma: Box::new(sigma),
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// `alpha = 0`, `sigma = 0`.
    pub fn zero(state_dim: usize, noise_dim: usize) -> Self {
        Self::new(
            state_dim,
            noise_dim,
            move |_, _| Array1::zeros(state_dim),
            move |_, _| Array2::zeros((state_dim, noise_dim)),
        )
    }
}

impl StateCoefficients for FnCoefficients {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn weight(&self) -> f64 {
        self.weight
    }

    fn alpha_at(&self, t: f64, x: ArrayView1<'_, f64>) -> Array1<f64> {
        (self.alpha)(t, x)
    }

    fn sigma_at(&self, t: f64, x: ArrayView1<'_, f64>) -> Array2<f64> {
        (self.sigma)(t, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptednessReport {
    pub max_defect: f64,
    pub worst_index: usize,
}

impl AdaptednessReport {
    pub fn is_adapted(&self) -> bool {
        self.max_defect <= 1e-12
    }
}

/// Compares every evaluation on `w` with the evaluation on `w` frozen at the same time.
pub fn check_adapted(coeffs: &dyn CoefficientPair, w: &PathRecord) -> AdaptednessReport {
    let mut report = AdaptednessReport {
        max_defect: 0.0,
        worst_index: 0,
    };
    let full = w.full();
    for i in 0..w.len() {
        let frozen = freeze_at(w, i);
        let fv = frozen.full();
        let da = (&coeffs.alpha(i, &full) - &coeffs.alpha(i, &fv))
            .iter()
            .fold(0.0_f64, |m, d| m.max(d.abs()));
        let ds = (&coeffs.sigma(i, &full) - &coeffs.sigma(i, &fv))
            .iter()
            .fold(0.0_f64, |m, d| m.max(d.abs()));
        let d = da.max(ds);
        if d > report.max_defect || d.is_nan() {
            report = AdaptednessReport {
                max_defect: if d.is_nan() { f64::INFINITY } else { d },
                worst_index: i,
            };
        }
    }
    report
}

fn time_cells(frame: &dyn Dilation, grid: &TimeGrid) -> Result<i64> {
    frame.cells_per_step(grid.dt())
}

fn check_dims(frame: &dyn Dilation, coeffs: &dyn CoefficientPair) -> Result<()> {
    if coeffs.state_dim() != frame.base_dim() {
        return Err(FrameError::Dimension {
            context: "coefficients vs frame",
            expected: frame.base_dim(),
            found: coeffs.state_dim(),
        });
    }
    Ok(())
}

/// `a(t_i, w) = U_{-t_i} l alpha(t_i, w)`.
pub fn coeff_a(
    frame: &dyn Dilation,
    coeffs: &dyn CoefficientPair,
    i: usize,
    w: &dyn PathAccess,
) -> Result<Array1<f64>> {
    check_dims(frame, coeffs)?;
    let c = time_cells(frame, w.grid())? * i as i64;
    Ok(frame.embed_shifted_cells(-c, coeffs.alpha(i, w).view()))
}

/// `b(t_i, w) = U_{-t_i} l sigma(t_i, w)`, column by column.
pub fn coeff_b(
    frame: &dyn Dilation,
    coeffs: &dyn CoefficientPair,
    i: usize,
    w: &dyn PathAccess,
) -> Result<Array2<f64>> {
    check_dims(frame, coeffs)?;
    let c = time_cells(frame, w.grid())? * i as i64;
    Ok(lift_columns(frame, -c, &coeffs.sigma(i, w)))
}

fn lift_columns(frame: &dyn Dilation, cells: i64, m: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((frame.big_dim(), m.ncols()));
    for (j, col) in m.columns().into_iter().enumerate() {
        out.column_mut(j)
            .assign(&frame.embed_shifted_cells(cells, col));
    }
    out
}

/// `Pi_2 g = g - l pi g`.
pub fn kernel_component(frame: &dyn Dilation, g: ArrayView1<'_, f64>) -> Array1<f64> {
    &g - &frame.embed(frame.project(g).view())
}

/// Lazily evaluated `Gamma(w)` over a big-space path view.
pub struct GammaView<'a> {
    frame: &'a dyn Dilation,
    w: &'a dyn PathAccess,
    correction: Option<Array1<f64>>,
    cells_per_step: i64,
}

impl<'a> GammaView<'a> {
    pub fn new(frame: &'a dyn Dilation, w: &'a dyn PathAccess) -> Result<Self> {
        Self::build(frame, w, true)
    }

    /// `pi U w`, without the `Pi_2 w(0)` correction.
    pub fn uncorrected(frame: &'a dyn Dilation, w: &'a dyn PathAccess) -> Result<Self> {
        Self::build(frame, w, false)
    }

    fn build(frame: &'a dyn Dilation, w: &'a dyn PathAccess, corrected: bool) -> Result<Self> {
        if w.dim() != frame.big_dim() {
            return Err(FrameError::Dimension {
                context: "big-space path",
                expected: frame.big_dim(),
                found: w.dim(),
            });
        }
        let cells_per_step = time_cells(frame, w.grid())?;
        let correction = corrected.then(|| kernel_component(frame, w.state(0).view()));
        Ok(Self {
            frame,
            w,
            correction,
            cells_per_step,
        })
    }
}

impl PathAccess for GammaView<'_> {
    fn grid(&self) -> &TimeGrid {
        self.w.grid()
    }

    fn dim(&self) -> usize {
        self.frame.base_dim()
    }

    fn last(&self) -> usize {
        self.w.last()
    }

    fn state(&self, i: usize) -> CowArray<'_, f64, Ix1> {
        let i = i.min(self.w.last());
        let wi = self.w.state(i);
        let c = self.cells_per_step * i as i64;
        let v = match &self.correction {
            Some(corr) => self.frame.project_shifted_cells(c, (&wi - corr).view()),
            None => self.frame.project_shifted_cells(c, wi.view()),
        };
        CowArray::from(v)
    }
}

/// Pointwise `pi` of a big-space path view.
struct ProjectedView<'a> {
    frame: &'a dyn Dilation,
    w: &'a dyn PathAccess,
}

impl PathAccess for ProjectedView<'_> {
    fn grid(&self) -> &TimeGrid {
        self.w.grid()
    }

    fn dim(&self) -> usize {
        self.frame.base_dim()
    }

    fn last(&self) -> usize {
        self.w.last()
    }

    fn state(&self, i: usize) -> CowArray<'_, f64, Ix1> {
        CowArray::from(self.frame.project(self.w.state(i).view()))
    }
}

fn materialize_base(frame: &dyn Dilation, view: &dyn PathAccess) -> PathRecord {
    crate::spaces::materialize(view, frame.base_weight())
}

/// `Gamma(w)(t_i) = pi U_{t_i} (w(t_i) - Pi_2 w(0))`.
pub fn gamma(frame: &dyn Dilation, w: &PathRecord) -> Result<PathRecord> {
    let full = w.full();
    let view = GammaView::new(frame, &full)?;
    Ok(materialize_base(frame, &view))
}

/// `pi U w` without the kernel correction; agrees with [`gamma`] when `w(0)` lies in the range of `l`.
pub fn gamma_uncorrected(frame: &dyn Dilation, w: &PathRecord) -> Result<PathRecord> {
    let full = w.full();
    let view = GammaView::uncorrected(frame, &full)?;
    Ok(materialize_base(frame, &view))
}

/// `Delta(v)(t_i) = U_{-t_i} l v(t_i)`; `gamma(delta(v)) = v`.
pub fn delta(frame: &dyn Dilation, v: &PathRecord) -> Result<PathRecord> {
    if v.dim() != frame.base_dim() {
        return Err(FrameError::Dimension {
            context: "base-space path",
            expected: frame.base_dim(),
            found: v.dim(),
        });
    }
    let grid = *v.grid();
    let c = time_cells(frame, &grid)?;
    let mut out = PathRecord::zeros(grid, frame.big_dim(), frame.big_weight());
    for i in 0..v.len() {
        let lifted = frame.embed_shifted_cells(-c * i as i64, v.state(i));
        out.states_mut().row_mut(i).assign(&lifted);
    }
    Ok(out)
}

/// Alias of [`gamma`] read as the map from SDE solutions back to SPDE solutions.
pub fn x_from_y(frame: &dyn Dilation, y: &PathRecord) -> Result<PathRecord> {
    gamma(frame, y)
}

/// Pointwise `pi Z`.
pub fn project_z_to_x(frame: &dyn Dilation, z: &PathRecord) -> Result<PathRecord> {
    if z.dim() != frame.big_dim() {
        return Err(FrameError::Dimension {
            context: "big-space path",
            expected: frame.big_dim(),
            found: z.dim(),
        });
    }
    let full = z.full();
    Ok(materialize_base(frame, &ProjectedView { frame, w: &full }))
}

/// `Y = l X(0) + sum a(t_j, X) dt + sum b(t_j, X) dW_j` with left-endpoint sums.
pub fn y_from_x(
    frame: &dyn Dilation,
    coeffs: &dyn CoefficientPair,
    x: &PathRecord,
    driver: &DriverBundle,
) -> Result<PathRecord> {
    check_dims(frame, coeffs)?;
    let grid = *x.grid();
    grid.check_same(&driver.grid)?;
    if driver.modes() != coeffs.noise_dim() {
        return Err(FrameError::Dimension {
            context: "driver modes",
            expected: coeffs.noise_dim(),
            found: driver.modes(),
        });
    }
    frame.check_horizon(grid.t_end())?;
    let c = time_cells(frame, &grid)?;
    let dt = grid.dt();
    let mut y = PathRecord::zeros(grid, frame.big_dim(), frame.big_weight());
    let mut current = frame.embed(x.state(0));
    y.states_mut().row_mut(0).assign(&current);
    for i in 0..grid.n_steps() {
        let view = x.frozen(i);
        let mut local = coeffs.alpha(i, &view) * dt;
        local += &coeffs.sigma(i, &view).dot(&driver.increment(i));
        current += &frame.embed_shifted_cells(-c * i as i64, local.view());
        y.states_mut().row_mut(i + 1).assign(&current);
    }
    Ok(y)
}

/// `alpha_bar(t, w) = a(t, Gamma(w))`, `sigma_bar(t, w) = b(t, Gamma(w))`: the SDE in the moving frame.
pub struct FrameCoefficients<'a> {
    pub frame: &'a dyn Dilation,
    pub coeffs: &'a dyn CoefficientPair,
}

impl<'a> FrameCoefficients<'a> {
    pub fn new(frame: &'a dyn Dilation, coeffs: &'a dyn CoefficientPair) -> Result<Self> {
        check_dims(frame, coeffs)?;
        Ok(Self { frame, coeffs })
    }

    fn cells_at(&self, i: usize, w: &dyn PathAccess) -> i64 {
        // commensurability is checked by the solver through `check_frame_grid`
        self.frame.cells_per_step(w.grid().dt()).unwrap_or(0) * i as i64
    }

    pub fn check_frame_grid(&self, grid: &TimeGrid) -> Result<()> {
        self.frame.check_horizon(grid.t_end())?;
        time_cells(self.frame, grid).map(|_| ())
    }
}

impl CoefficientPair for FrameCoefficients<'_> {
    fn state_dim(&self) -> usize {
        self.frame.big_dim()
    }

    fn noise_dim(&self) -> usize {
        self.coeffs.noise_dim()
    }

    fn weight(&self) -> f64 {
        self.frame.big_weight()
    }

    fn alpha(&self, i: usize, w: &dyn PathAccess) -> Array1<f64> {
        let x = GammaView::new(self.frame, w).expect("frame-compatible path");
        let a = self.coeffs.alpha(i, &x);
        self.frame.embed_shifted_cells(-self.cells_at(i, w), a.view())
    }

    fn sigma(&self, i: usize, w: &dyn PathAccess) -> Array2<f64> {
        let x = GammaView::new(self.frame, w).expect("frame-compatible path");
        lift_columns(self.frame, -self.cells_at(i, w), &self.coeffs.sigma(i, &x))
    }
}

/// `alpha_hat(t, w) = l alpha(t, pi w)`, `sigma_hat(t, w) = l sigma(t, pi w)`.
pub struct HatCoefficients<'a> {
    pub frame: &'a dyn Dilation,
    pub coeffs: &'a dyn CoefficientPair,
}

pub fn lift_hat_coefficients<'a>(
    frame: &'a dyn Dilation,
    coeffs: &'a dyn CoefficientPair,
) -> Result<HatCoefficients<'a>> {
    check_dims(frame, coeffs)?;
    Ok(HatCoefficients { frame, coeffs })
}

impl CoefficientPair for HatCoefficients<'_> {
    fn state_dim(&self) -> usize {
        self.frame.big_dim()
    }

    fn noise_dim(&self) -> usize {
        self.coeffs.noise_dim()
    }

    fn weight(&self) -> f64 {
        self.frame.big_weight()
    }

    fn alpha(&self, i: usize, w: &dyn PathAccess) -> Array1<f64> {
        let x = ProjectedView { frame: self.frame, w };
        self.frame.embed(self.coeffs.alpha(i, &x).view())
    }

    fn sigma(&self, i: usize, w: &dyn PathAccess) -> Array2<f64> {
        let x = ProjectedView { frame: self.frame, w };
        lift_columns(self.frame, 0, &self.coeffs.sigma(i, &x))
    }
}
