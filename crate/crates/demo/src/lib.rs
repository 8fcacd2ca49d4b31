//! Browser bindings: Tanaka paths with their sign flip and reconstruction, the
//! dilation diagram error, and the staged Ito-approximation errors.
//!
//! The plain functions return `Result<_, String>` and are what the native tests
//! exercise; the `js_*` exports wrap them for `wasm-bindgen`.

use ndarray::{Array1, Array2};
use spde_frame::experiments::parse_schedule;
use spde_frame::ito_approx::{convergence_study, reference_integral, ApproxSchedule, ComposedWithInverse, DeterministicIntegrand};
use spde_frame::lab::{tanaka_phi_reconstruct, tanaka_simulate, TanakaConfig};
use spde_frame::noise::{associate_q_wiener, harmonic_embedding, sample_driver};
use spde_frame::semigroups::{build_dilation, Dilation};
use spde_frame::spaces::{PathRecord, SpatialGrid, TimeGrid};
use wasm_bindgen::prelude::*;

/// One Tanaka path of mode `k`, flattened as rows `t, X^k, -X^k, Phi(B)^k`.
pub fn tanaka_mode(n_modes: usize, k: usize, n_steps: usize, seed: u64, stream: u64) -> Result<Vec<f64>, String> {
    if k == 0 || k > n_modes {
        return Err(format!("mode {k} outside 1..={n_modes}"));
    }
    let grid = TimeGrid::new(1.0, n_steps).map_err(|e| e.to_string())?;
    let cfg = TanakaConfig {
        n_modes,
        grid,
        n_paths: 1,
        seed,
    };
    let (run, _) = tanaka_simulate(&cfg, stream).map_err(|e| e.to_string())?;
    let phi = tanaka_phi_reconstruct(&run.b);
    let mut out = Vec::with_capacity(4 * grid.n_points());
    for i in 0..grid.n_points() {
        let x = run.x.state(i)[k - 1];
        out.extend([grid.time(i), x, -x, phi.state(i)[k - 1]]);
    }
    Ok(out)
}

/// `|pi U_t l e_k - e^{-kt} e_k|` for `k = 1..=n_modes`, on the window `[x_min, t]` with step `h`.
pub fn diagram_errors(n_modes: usize, x_min: f64, h: f64, t: f64) -> Result<Vec<f64>, String> {
    let rates = Array1::from_shape_fn(n_modes, |k| (k + 1) as f64);
    let space = SpatialGrid::new(x_min, t.max(h), h).map_err(|e| e.to_string())?;
    let frame = build_dilation(rates.view(), &space, 0.5).map_err(|e| e.to_string())?;
    let cells = frame.cells(t).map_err(|e| e.to_string())?;
    Ok((0..n_modes)
        .map(|k| {
            let mut e = Array1::zeros(n_modes);
            e[k] = 1.0;
            let got = frame.project(frame.shift_cells(cells, frame.embed(e.view()).view()).view());
            let expect = &e * (-((k + 1) as f64) * t).exp();
            (&got - &expect).iter().map(|d| d * d).sum::<f64>().sqrt()
        })
        .collect())
}

/// Embedding profile of mode `k`, rows `x, f_k(x)`.
pub fn dilation_profile(n_modes: usize, k: usize, x_min: f64, h: f64) -> Result<Vec<f64>, String> {
    let rates = Array1::from_shape_fn(n_modes, |k| (k + 1) as f64);
    let space = SpatialGrid::new(x_min, h, h).map_err(|e| e.to_string())?;
    let frame = build_dilation(rates.view(), &space, 0.5).map_err(|e| e.to_string())?;
    if k == 0 || k > n_modes {
        return Err(format!("mode {k} outside 1..={n_modes}"));
    }
    let profile = frame.profile(k - 1).map_err(|e| e.to_string())?;
    Ok((0..profile.values.len())
        .flat_map(|i| [profile.grid.x(i), profile.values[i]])
        .collect())
}

/// Mean sup error per stage for `int diag(e^{-kt}/k) dW` on `[0, 1]`.
pub fn ito_stage_errors(schedule: &str, n_modes: usize, n_steps: usize, paths: usize, seed: u64) -> Result<Vec<f64>, String> {
    let stages = parse_schedule(schedule)?;
    let grid = TimeGrid::new(1.0, n_steps).map_err(|e| e.to_string())?;
    let j_diag = harmonic_embedding(n_modes);
    let lambda = j_diag.mapv(|j| j * j);
    let b = DeterministicIntegrand::new(n_modes, n_modes, move |t| {
        Array2::from_diag(&Array1::from_shape_fn(n_modes, |k| (-((k + 1) as f64) * t).exp() / (k + 1) as f64))
    });
    let b_bar = ComposedWithInverse::new(b, lambda.view()).map_err(|e| e.to_string())?;
    let schedule = ApproxSchedule::uniform(stages, 1).map_err(|e| e.to_string())?;
    let x = PathRecord::zeros(grid, n_modes, 1.0);
    let mut sums = vec![0.0; schedule.n_stages()];
    for p in 0..paths.max(1) {
        let driver = sample_driver(grid, n_modes, seed, p as u64).map_err(|e| e.to_string())?;
        let q = associate_q_wiener(&driver, j_diag.view()).map_err(|e| e.to_string())?;
        let reference = reference_integral(&b_bar, &x.full(), &q).map_err(|e| e.to_string())?;
        let rep = convergence_study(&b_bar, &x.full(), &q, &schedule, &reference, f64::INFINITY)
            .map_err(|e| e.to_string())?;
        for (s, row) in sums.iter_mut().zip(&rep.stages) {
            *s += row.sup_error;
        }
    }
    Ok(sums.into_iter().map(|s| s / paths.max(1) as f64).collect())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = tanakaMode)]
pub fn js_tanaka_mode(n_modes: usize, k: usize, n_steps: usize, seed: u64, stream: u64) -> Result<Vec<f64>, JsError> {
    js(tanaka_mode(n_modes, k, n_steps, seed, stream))
}

#[wasm_bindgen(js_name = diagramErrors)]
pub fn js_diagram_errors(n_modes: usize, x_min: f64, h: f64, t: f64) -> Result<Vec<f64>, JsError> {
    js(diagram_errors(n_modes, x_min, h, t))
}

#[wasm_bindgen(js_name = dilationProfile)]
pub fn js_dilation_profile(n_modes: usize, k: usize, x_min: f64, h: f64) -> Result<Vec<f64>, JsError> {
    js(dilation_profile(n_modes, k, x_min, h))
}

#[wasm_bindgen(js_name = itoStageErrors)]
pub fn js_ito_stage_errors(schedule: &str, n_modes: usize, n_steps: usize, paths: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    js(ito_stage_errors(schedule, n_modes, n_steps, paths, seed))
}
