//! Time stepping: Euler-Maruyama for path-dependent SDEs, the exponential-Euler
//! scheme for the mild form of an SPDE, and left-endpoint Ito sums.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{FrameError, Result};
use crate::moving_frame::CoefficientPair;
use crate::noise::DriverBundle;
use crate::semigroups::Semigroup;
use crate::spaces::{PathRecord, TimeGrid};

/// States whose norm exceeds this are reported as a divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerMaruyama,
    ExpEulerMild,
}

fn check_inputs(coeffs: &dyn CoefficientPair, y0: ArrayView1<'_, f64>, driver: &DriverBundle) -> Result<()> {
    if y0.len() != coeffs.state_dim() {
        return Err(FrameError::Dimension {
            context: "initial value",
            expected: coeffs.state_dim(),
            found: y0.len(),
        });
    }
    if driver.modes() != coeffs.noise_dim() {
        return Err(FrameError::Dimension {
            context: "driver modes",
            expected: coeffs.noise_dim(),
            found: driver.modes(),
        });
    }
    Ok(())
}

fn guard(step: usize, v: &Array1<f64>, weight: f64) -> Result<()> {
    let norm = (weight * v.dot(v)).sqrt();
    if !norm.is_finite() || norm > DIVERGENCE_LIMIT {
        return Err(FrameError::Divergence {
            step,
            norm,
            limit: DIVERGENCE_LIMIT,
        });
    }
    Ok(())
}

/// `alpha(t_i, w) dt + sigma(t_i, w) dW_i` with `w` frozen at `t_i`.
fn local_increment(coeffs: &dyn CoefficientPair, path: &PathRecord, i: usize, driver: &DriverBundle) -> Array1<f64> {
    let view = path.frozen(i);
    let mut inc = coeffs.alpha(i, &view) * driver.grid.dt();
    inc += &coeffs.sigma(i, &view).dot(&driver.increment(i));
    inc
}

/// `Y(t_{i+1}) = Y(t_i) + alpha(t_i, Y) dt + sigma(t_i, Y) dW_i`.
pub fn euler_maruyama(
    coeffs: &dyn CoefficientPair,
    y0: ArrayView1<'_, f64>,
    driver: &DriverBundle,
) -> Result<PathRecord> {
    check_inputs(coeffs, y0, driver)?;
    let grid = driver.grid;
    let mut path = PathRecord::zeros(grid, y0.len(), coeffs.weight());
    path.states_mut().row_mut(0).assign(&y0);
    for i in 0..grid.n_steps() {
        let next = &path.state(i) + &local_increment(coeffs, &path, i, driver);
        guard(i + 1, &next, coeffs.weight())?;
        path.states_mut().row_mut(i + 1).assign(&next);
    }
    Ok(path)
}

/// `X(t_{i+1}) = S_dt [X(t_i) + alpha(t_i, X) dt + sigma(t_i, X) dW_i]`.
///
/// Unrolled, this is the discrete mild formula with kernels `S_{t_n - t_j}`.
pub fn exp_euler_mild(
    semigroup: &dyn Semigroup,
    coeffs: &dyn CoefficientPair,
    x0: ArrayView1<'_, f64>,
    driver: &DriverBundle,
) -> Result<PathRecord> {
    check_inputs(coeffs, x0, driver)?;
    if semigroup.dim() != x0.len() {
        return Err(FrameError::Dimension {
            context: "semigroup",
            expected: x0.len(),
            found: semigroup.dim(),
        });
    }
    let grid = driver.grid;
    let dt = grid.dt();
    let mut path = PathRecord::zeros(grid, x0.len(), coeffs.weight());
    path.states_mut().row_mut(0).assign(&x0);
    for i in 0..grid.n_steps() {
        let bracket = &path.state(i) + &local_increment(coeffs, &path, i, driver);
        let next = semigroup.apply(dt, bracket.view())?;
        guard(i + 1, &next, coeffs.weight())?;
        path.states_mut().row_mut(i + 1).assign(&next);
    }
    Ok(path)
}

/// Largest deviation of `x` from the discrete mild identity
/// `x(t_n) = S_{t_n} x(0) + sum_{j<n} S_{t_n - t_j} (alpha_j dt + sigma_j dW_j)`.
pub fn mild_residual(
    semigroup: &dyn Semigroup,
    coeffs: &dyn CoefficientPair,
    x: &PathRecord,
    driver: &DriverBundle,
) -> Result<f64> {
    x.grid().check_same(&driver.grid)?;
    let grid = *x.grid();
    let locals: Vec<Array1<f64>> = (0..grid.n_steps())
        .map(|j| local_increment(coeffs, x, j, driver))
        .collect();
    let mut worst = 0.0_f64;
    for n in 0..grid.n_points() {
        let mut rhs = semigroup.apply(grid.time(n), x.state(0))?;
        for (j, local) in locals.iter().enumerate().take(n) {
            rhs += &semigroup.apply(grid.time(n - j), local.view())?;
        }
        worst = worst.max(x.norm_of((&x.state(n) - &rhs).view()));
    }
    Ok(worst)
}

/// Running left-endpoint sums `sum_{j<i} M_j dW_j`.
pub fn discrete_ito(integrand: &[Array2<f64>], driver: &DriverBundle) -> Result<PathRecord> {
    let grid: TimeGrid = driver.grid;
    if integrand.len() != grid.n_steps() {
        return Err(FrameError::Dimension {
            context: "integrand length",
            expected: grid.n_steps(),
            found: integrand.len(),
        });
    }
    let rows = integrand.first().map(|m| m.nrows()).unwrap_or(0);
    let mut out = PathRecord::zeros(grid, rows.max(1), 1.0);
    let mut acc = Array1::zeros(rows);
    for (j, m) in integrand.iter().enumerate() {
        if m.nrows() != rows || m.ncols() != driver.modes() {
            return Err(FrameError::Dimension {
                context: "integrand shape",
                expected: rows * driver.modes(),
                found: m.nrows() * m.ncols(),
            });
        }
        acc += &m.dot(&driver.increment(j));
        out.states_mut().row_mut(j + 1).assign(&acc);
    }
    Ok(out)
}
