use ndarray::{Array1, ArrayView1};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{FrameError, Result};
use crate::moving_frame::{CoefficientPair, FrameCoefficients};
use crate::noise::sample_driver;
use crate::report::{Check, StatReport};
use crate::semigroups::Dilation;
use crate::solvers::euler_maruyama;
use crate::spaces::{PathRecord, TimeGrid};

/// Slack for floating-point error in the monotonicity inequality.
pub const MONOTONE_TOL: f64 = 1e-9;

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform point of the ball of `radius` in the `weight`-scaled norm.
fn ball_point(rng: &mut ChaCha8Rng, dim: usize, weight: f64, radius: f64) -> Array1<f64> {
    let mut v: Array1<f64> = Array1::from_shape_simple_fn(dim, || StandardNormal.sample(&mut *rng));
    let norm = (weight * v.dot(&v)).sqrt();
    let r = radius * uniform01(rng).powf(1.0 / dim as f64);
    v *= r / norm.max(f64::MIN_POSITIVE);
    v
}

/// Largest value of
/// `2<x - y, alpha(t, x) - alpha(t, y)> + |sigma(t, x) - sigma(t, y)|_HS^2 - L_t |x - y|^2`
/// over random pairs with `|x|, |y| <= radius` and random grid times.
///
/// Coefficients are evaluated on constant paths, so path-dependent pairs are
/// probed through their state dependence only.
pub fn monotone_certificate(
    coeffs: &dyn CoefficientPair,
    l_fn: &dyn Fn(f64) -> f64,
    grid: &TimeGrid,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> StatReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dim, w) = (coeffs.state_dim(), coeffs.weight());
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_samples {
        let x = ball_point(&mut rng, dim, w, radius);
        let y = ball_point(&mut rng, dim, w, radius);
        let i = (rng.next_u64() % (grid.n_points() as u64)) as usize;
        let px = PathRecord::constant(*grid, x.view(), w);
        let py = PathRecord::constant(*grid, y.view(), w);
        let (vx, vy) = (px.full(), py.full());
        let d = &x - &y;
        let da = coeffs.alpha(i, &vx) - coeffs.alpha(i, &vy);
        let ds = coeffs.sigma(i, &vx) - coeffs.sigma(i, &vy);
        let lhs = 2.0 * w * d.dot(&da) + w * ds.iter().map(|v| v * v).sum::<f64>();
        worst = worst.max(lhs - l_fn(grid.time(i)) * w * d.dot(&d));
    }
    let mut r = StatReport::default();
    r.push(Check::at_most(
        "max monotonicity excess",
        worst,
        MONOTONE_TOL,
        "uniqueness_lab::monotone_certificate",
    ));
    r.count("sampled pairs", n_samples as u64);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallConfig {
    /// Constant in the monotonicity condition.
    pub l: f64,
    pub eps: f64,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub certificate_samples: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallReport {
    pub l: f64,
    pub eps: f64,
    pub times: Vec<f64>,
    /// Mean over paths of `|Y(t) - Y'(t)|^2`.
    pub mean_sq_gap: Vec<f64>,
    /// `eps^2 e^{L t}`.
    pub bound: Vec<f64>,
    pub identical_max_diff: f64,
    pub report: StatReport,
}

/// Two Euler-Maruyama runs per driver, from `x0` and from `x0` moved by `eps`
/// along the first unit vector, compared with `eps^2 e^{Lt}`.
///
/// With a `frame`, the runs solve the moving-frame SDE with coefficients
/// `U_{-t} l alpha(t, pi U_t .)`; the transformed coefficients are certified too.
/// Refuses to run when the original coefficients fail the certificate.
pub fn gronwall_experiment(
    coeffs: &dyn CoefficientPair,
    frame: Option<&dyn Dilation>,
    x0: ArrayView1<'_, f64>,
    cfg: &GronwallConfig,
) -> Result<GronwallReport> {
    let l = cfg.l;
    let mut report = monotone_certificate(coeffs, &|_| l, &cfg.grid, cfg.certificate_samples, cfg.radius, cfg.seed);
    if !report.passed() {
        return Err(FrameError::Precondition(format!(
            "coefficients fail the monotonicity certificate with L = {l} (excess {:e})",
            report.checks[0].value
        )));
    }
    if x0.len() != coeffs.state_dim() {
        return Err(FrameError::Dimension {
            context: "initial value",
            expected: coeffs.state_dim(),
            found: x0.len(),
        });
    }
    let mut x1 = x0.to_owned();
    x1[0] += cfg.eps / coeffs.weight().sqrt();

    let lifted;
    let (solver_coeffs, y0, y1): (&dyn CoefficientPair, Array1<f64>, Array1<f64>) = match frame {
        Some(f) => {
            lifted = FrameCoefficients::new(f, coeffs)?;
            lifted.check_frame_grid(&cfg.grid)?;
            let transformed =
                monotone_certificate(&lifted, &|_| l, &cfg.grid, cfg.certificate_samples, cfg.radius, cfg.seed ^ 1);
            for mut c in transformed.checks {
                c.name = format!("transformed: {}", c.name);
                report.push(c);
            }
            (&lifted, f.embed(x0), f.embed(x1.view()))
        }
        None => (coeffs, x0.to_owned(), x1),
    };

    let grid = cfg.grid;
    let mut sum_gap = vec![0.0; grid.n_points()];
    let mut identical_max_diff = 0.0_f64;
    for p in 0..cfg.n_paths {
        let driver = sample_driver(grid, coeffs.noise_dim(), cfg.seed, p as u64)?;
        let a = euler_maruyama(solver_coeffs, y0.view(), &driver)?;
        let b = euler_maruyama(solver_coeffs, y0.view(), &driver)?;
        identical_max_diff = identical_max_diff.max(a.sup_distance(&b)?);
        let c = euler_maruyama(solver_coeffs, y1.view(), &driver)?;
        let w = a.weight();
        for (i, s) in sum_gap.iter_mut().enumerate() {
            let d = &a.state(i) - &c.state(i);
            *s += w * d.dot(&d);
        }
    }
    let n = cfg.n_paths as f64;
    let times: Vec<f64> = (0..grid.n_points()).map(|i| grid.time(i)).collect();
    let mean_sq_gap: Vec<f64> = sum_gap.iter().map(|s| s / n).collect();
    let bound: Vec<f64> = times.iter().map(|t| cfg.eps * cfg.eps * (l * t).exp()).collect();
    let excess = mean_sq_gap
        .iter()
        .zip(&bound)
        .map(|(g, b)| g - 1.1 * b)
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(Check::at_most(
        "identical start: max path difference",
        identical_max_diff,
        1e-12,
        "uniqueness_lab::gronwall_experiment",
    ));
    report.push(Check::at_most(
        "max_t mean gap^2 - 1.1 eps^2 e^{Lt}",
        excess,
        0.0,
        "uniqueness_lab::gronwall_experiment",
    ));
    Ok(GronwallReport {
        l,
        eps: cfg.eps,
        times,
        mean_sq_gap,
        bound,
        identical_max_diff,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moving_frame::FnCoefficients;
    use crate::semigroups::{GroupFrame, TranslationGroup};
    use crate::spaces::SpatialGrid;
    use ndarray::{array, Array2};

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 32).unwrap()
    }

    fn linear(rate: f64, n: usize) -> FnCoefficients {
        FnCoefficients::new(
            n,
            n,
            move |_, x| x.to_owned() * rate,
            move |_, _| Array2::eye(n) * 0.3,
        )
    }

    #[test]
    fn certificates_of_the_three_families() {
        let g = grid();
        let contract = linear(-1.0, 3);
        assert!(monotone_certificate(&contract, &|_| 0.0, &g, 500, 5.0, 1).passed());
        let expand = linear(1.0, 3);
        assert!(monotone_certificate(&expand, &|_| 2.0, &g, 500, 5.0, 1).passed());
        assert!(!monotone_certificate(&expand, &|_| 1.0, &g, 500, 5.0, 1).passed());
        let mult = FnCoefficients::new(1, 1, |_, _| array![0.0], |_, x| array![[x[0]]]);
        assert!(monotone_certificate(&mult, &|_| 1.0, &g, 500, 5.0, 1).passed());
        assert!(!monotone_certificate(&mult, &|_| 0.5, &g, 500, 5.0, 1).passed());
    }

    fn cfg(l: f64, eps: f64) -> GronwallConfig {
        GronwallConfig {
            l,
            eps,
            grid: grid(),
            n_paths: 8,
            seed: 3,
            certificate_samples: 200,
            radius: 4.0,
        }
    }

    #[test]
    fn contraction_gap_shrinks() {
        let c = linear(-1.0, 2);
        let r = gronwall_experiment(&c, None, array![0.5, -0.5].view(), &cfg(0.0, 0.1)).unwrap();
        assert!(r.report.passed(), "{:#?}", r.report);
        assert!(r.mean_sq_gap.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.identical_max_diff, 0.0);
    }

    #[test]
    fn zero_gap_stays_zero() {
        let c = linear(1.0, 2);
        let r = gronwall_experiment(&c, None, array![0.5, -0.5].view(), &cfg(2.0, 0.0)).unwrap();
        assert!(r.mean_sq_gap.iter().all(|&g| g == 0.0));
        assert!(r.report.passed());
    }

    #[test]
    fn refuses_uncertified_coefficients() {
        let c = linear(1.0, 2);
        assert!(matches!(
            gronwall_experiment(&c, None, array![0.0, 0.0].view(), &cfg(1.0, 0.1)),
            Err(FrameError::Precondition(_))
        ));
    }

    #[test]
    fn translation_group_nemytskii() {
        let space = SpatialGrid::new(-1.0, 1.0, 1.0 / 32.0).unwrap();
        let frame = GroupFrame {
            group: TranslationGroup::new(space),
        };
        let n = space.n_points();
        let coeffs = FnCoefficients::new(
            n,
            1,
            |_, x| x.mapv(f64::sin),
            move |_, _| Array2::from_elem((n, 1), 0.2),
        )
        .with_weight(space.h());
        let x0 = Array1::from_shape_fn(n, |i| (-space.x(i).powi(2)).exp());
        let cfg = GronwallConfig {
            grid: TimeGrid::new(1.0, 32).unwrap(),
            ..cfg(2.0, 0.1)
        };
        let r = gronwall_experiment(&coeffs, Some(&frame), x0.view(), &cfg).unwrap();
        assert!(r.report.passed(), "{:#?}", r.report);
        assert!(r.report.check("transformed: max monotonicity excess").is_some());
    }
}
