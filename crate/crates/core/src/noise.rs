//! Truncated cylindrical driver `W = (beta_k)` and the associated trace-class
//! Q-Wiener process `W_bar = sum_k beta_k J e_k` for diagonal `J`.
//!
//! Streams come from ChaCha8 keyed by `seed` with the 64-bit stream selector set
//! to `stream_id`, so any `(seed, stream_id)` pair is reproducible on its own and
//! distinct stream ids never share state.

use std::io::{self, Write};

use ndarray::{Array1, Array2, ArrayView1};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{FrameError, Result};
use crate::spaces::{PathRecord, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverBundle {
    pub grid: TimeGrid,
    #[serde(skip)]
    increments: Array2<f64>,
    pub seed: u64,
    pub stream_id: u64,
}

impl DriverBundle {
    /// Builds a bundle from explicit increments (`n_steps` rows, one column per mode).
    pub fn from_increments(grid: TimeGrid, increments: Array2<f64>) -> Result<Self> {
        if increments.nrows() != grid.n_steps() {
            return Err(FrameError::Dimension {
                context: "driver increments",
                expected: grid.n_steps(),
                found: increments.nrows(),
            });
        }
        if increments.ncols() == 0 {
            return Err(FrameError::Precondition("driver needs K >= 1 modes".into()));
        }
        Ok(Self {
            grid,
            increments,
            seed: 0,
            stream_id: 0,
        })
    }

    pub fn zeros(grid: TimeGrid, modes: usize) -> Self {
        Self {
            grid,
            increments: Array2::zeros((grid.n_steps(), modes.max(1))),
            seed: 0,
            stream_id: 0,
        }
    }

    pub fn modes(&self) -> usize {
        self.increments.ncols()
    }

    pub fn increments(&self) -> &Array2<f64> {
        &self.increments
    }

    pub fn increments_mut(&mut self) -> &mut Array2<f64> {
        &mut self.increments
    }

    /// Increment vector `W(t_{i+1}) - W(t_i)`.
    pub fn increment(&self, i: usize) -> ArrayView1<'_, f64> {
        self.increments.row(i)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.increments *= factor;
        out
    }

    /// Cumulative sums `beta_k(t_i)`, starting at zero.
    pub fn cumulative(&self) -> PathRecord {
        let mut path = PathRecord::zeros(self.grid, self.modes(), 1.0);
        let states = path.states_mut();
        for i in 0..self.grid.n_steps() {
            let next = &states.row(i) + &self.increments.row(i);
            states.row_mut(i + 1).assign(&next);
        }
        path
    }

    /// Sums blocks of `factor` consecutive increments: the same Brownian path seen on a
    /// grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.grid.n_steps().is_multiple_of(factor) {
            return Err(FrameError::Precondition(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.grid.n_steps()
            )));
        }
        let n = self.grid.n_steps() / factor;
        let grid = TimeGrid::new(self.grid.t_end(), n)?;
        let mut inc = Array2::zeros((n, self.modes()));
        for (i, mut row) in inc.rows_mut().into_iter().enumerate() {
            for j in 0..factor {
                row += &self.increments.row(i * factor + j);
            }
        }
        Ok(Self {
            grid,
            increments: inc,
            seed: self.seed,
            stream_id: self.stream_id,
        })
    }

    /// Writes `t, beta_1, .., beta_K` (cumulative values) with a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t")?;
        for k in 1..=self.modes() {
            write!(out, ",beta_{k}")?;
        }
        writeln!(out)?;
        let cum = self.cumulative();
        for i in 0..cum.len() {
            write!(out, "{}", self.grid.time(i))?;
            for v in cum.state(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Independent `N(0, dt)` increments for `modes` Brownian motions.
pub fn sample_driver(grid: TimeGrid, modes: usize, seed: u64, stream_id: u64) -> Result<DriverBundle> {
    if modes == 0 {
        return Err(FrameError::Precondition("driver needs K >= 1 modes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    let sd = grid.dt().sqrt();
    let increments = Array2::from_shape_simple_fn((grid.n_steps(), modes), || {
        let z: f64 = StandardNormal.sample(&mut rng);
        sd * z
    });
    Ok(DriverBundle {
        grid,
        increments,
        seed,
        stream_id,
    })
}

/// Trace-class Wiener path `W_bar(t_i)` in the eigenbasis of `Q = J J^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct QWienerPath {
    pub grid: TimeGrid,
    cumulative: Array2<f64>,
    lambda: Array1<f64>,
    pub seed: u64,
    pub stream_id: u64,
}

impl QWienerPath {
    pub fn modes(&self) -> usize {
        self.cumulative.ncols()
    }

    pub fn cumulative(&self) -> &Array2<f64> {
        &self.cumulative
    }

    /// Eigenvalues of `Q`.
    pub fn lambda(&self) -> &Array1<f64> {
        &self.lambda
    }

    /// `W_bar(t_b) - W_bar(t_a)` for grid indices `a <= b`.
    pub fn increment(&self, a: usize, b: usize) -> Array1<f64> {
        &self.cumulative.row(b) - &self.cumulative.row(a)
    }
}

/// `J = diag(1/k)`, the embedding used in the Tanaka example.
pub fn harmonic_embedding(modes: usize) -> Array1<f64> {
    Array1::from_shape_fn(modes, |k| 1.0 / (k + 1) as f64)
}

/// Maps the driver through the diagonal Hilbert-Schmidt embedding `J = diag(j_diag)`.
pub fn associate_q_wiener(driver: &DriverBundle, j_diag: ArrayView1<'_, f64>) -> Result<QWienerPath> {
    if j_diag.len() != driver.modes() {
        return Err(FrameError::Dimension {
            context: "embedding diagonal",
            expected: driver.modes(),
            found: j_diag.len(),
        });
    }
    if let Some((index, &value)) = j_diag
        .iter()
        .enumerate()
        .find(|(_, &j)| !(j.is_finite() && j > 0.0))
    {
        return Err(FrameError::SingularEmbedding { index, value });
    }
    let mut cumulative = driver.cumulative().into_states();
    for (mut col, &j) in cumulative.columns_mut().into_iter().zip(j_diag) {
        col *= j;
    }
    Ok(QWienerPath {
        grid: driver.grid,
        cumulative,
        lambda: j_diag.mapv(|j| j * j),
        seed: driver.seed,
        stream_id: driver.stream_id,
    })
}

/// `beta_k = lambda_k^{-1/2} <W_bar, e_k>`: left inverse of [`associate_q_wiener`].
pub fn recover_components(q_path: &QWienerPath) -> Result<DriverBundle> {
    if let Some((index, &value)) = q_path
        .lambda
        .iter()
        .enumerate()
        .find(|(_, &l)| !(l.is_finite() && l > 0.0))
    {
        return Err(FrameError::SingularEmbedding { index, value });
    }
    let n = q_path.grid.n_steps();
    let scale = q_path.lambda.mapv(|l| 1.0 / l.sqrt());
    let mut increments = Array2::zeros((n, q_path.modes()));
    for i in 0..n {
        let d = q_path.increment(i, i + 1) * &scale;
        increments.row_mut(i).assign(&d);
    }
    Ok(DriverBundle {
        grid: q_path.grid,
        increments,
        seed: q_path.seed,
        stream_id: q_path.stream_id,
    })
}
