use serde::Serialize;

use crate::error::{FrameError, Result};

/// Smallest sample the asymptotic threshold is trusted for.
pub const KS_MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawTestReport {
    pub statistic: f64,
    pub threshold: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub alpha: f64,
    pub pass: bool,
}

/// `c(alpha) = sqrt(-ln(alpha / 2) / 2)`; `c(0.001) = 1.9495`.
pub fn ks_critical_value(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// `sup_x |F_a(x) - F_b(x)|` of the two empirical distribution functions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        // step past every copy of the smaller value so ties move both ECDFs together
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov test with the large-sample threshold
/// `c(alpha) sqrt((n_a + n_b) / (n_a n_b))`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<LawTestReport> {
    if a.len() < KS_MIN_SAMPLES || b.len() < KS_MIN_SAMPLES {
        return Err(FrameError::Precondition(format!(
            "KS test needs at least {KS_MIN_SAMPLES} samples per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FrameError::Range {
            what: "alpha",
            value: alpha,
            range: "(0, 1)".into(),
        });
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(FrameError::Precondition("KS samples contain NaN".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let statistic = ks_statistic(a, b);
    let threshold = ks_critical_value(alpha) * ((na + nb) / (na * nb)).sqrt();
    Ok(LawTestReport {
        statistic,
        threshold,
        n_a: a.len(),
        n_b: b.len(),
        alpha,
        pass: statistic <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    #[test]
    fn critical_value() {
        assert!((ks_critical_value(0.001) - 1.9495).abs() < 1e-4);
    }

    #[test]
    fn identical_samples() {
        let a: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let r = ks_two_sample(&a, &a, 0.001).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn shifted_uniforms_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..1000).map(|_| u.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..1000).map(|_| 0.5 + u.sample(&mut rng)).collect();
        let r = ks_two_sample(&a, &b, 0.001).unwrap();
        assert!((r.threshold - 0.0872).abs() < 1e-3);
        assert!((r.statistic - 0.5).abs() < 0.06);
        assert!(!r.pass);
    }

    #[test]
    fn same_law_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..1500).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_two_sample(&a, &b, 0.001).unwrap().pass);
    }

    #[test]
    fn ties_and_small_samples() {
        assert_eq!(ks_statistic(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]), 1.0 / 3.0);
        assert!(ks_two_sample(&[0.0; 10], &[0.0; 200], 0.001).is_err());
    }
}
