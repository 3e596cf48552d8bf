//! Sample versions of the circular statistics and the Monte Carlo
//! replication harness.
//!
//! The Fisher-Lee statistic is a U-statistic over all pairs; evaluating the
//! pairwise form is O(n^2), so the estimator here uses its algebraic
//! reduction to single-pass trigonometric sums:
//!
//! ```text
//! sum_{ij} sin(ti - tj) sin(pi - pj) = 2 (A B - C D)
//! sum_{ij} sin^2(ti - tj)            = 2 (a b - c^2)
//! ```
//!
//! with `A = sum cos t cos p`, `B = sum sin t sin p`, `C = sum cos t sin p`,
//! `D = sum sin t cos p`, and per-coordinate `a = sum cos^2`,
//! `b = sum sin^2`, `c = sum sin cos`. The numerator and denominators are
//! assembled in exactly this shared form, which makes perfect T-linear data
//! return exactly +/-1. The O(n^2) pairwise definition survives only as a
//! test oracle.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{wrap_angle, ModelParams, SeriesControl};
use crate::moments::correlation_report;
use crate::sampling::{sample_bivariate, SamplerConfig};

/// Denominator threshold below which sample statistics are degenerate.
const DEGENERATE_EPS: f64 = 1e-12;

fn mean_sin_cos(angles: &[f64]) -> (f64, f64) {
    let n = angles.len() as f64;
    let mut s = 0.0;
    let mut c = 0.0;
    for &a in angles {
        s += a.sin();
        c += a.cos();
    }
    (s / n, c / n)
}

/// Sample circular mean `atan2(mean sin, mean cos)`, in `[-pi, pi)`.
/// Errors when the resultant length is at or below 1e-12 (the direction is
/// then meaningless).
pub fn circular_mean(angles: &[f64]) -> Result<f64> {
    if angles.is_empty() {
        return Err(Error::DegenerateData(
            "circular mean of an empty sample".into(),
        ));
    }
    let (s, c) = mean_sin_cos(angles);
    let resultant = s.hypot(c);
    if resultant <= DEGENERATE_EPS {
        return Err(Error::UndefinedMean { resultant });
    }
    Ok(wrap_angle(s.atan2(c)))
}

/// Sample circular variance: one minus the mean resultant length, in
/// `[0, 1]`.
pub fn sample_circular_variance(angles: &[f64]) -> f64 {
    assert!(
        !angles.is_empty(),
        "sample_circular_variance requires a non-empty sample"
    );
    let (s, c) = mean_sin_cos(angles);
    (1.0 - s.hypot(c)).max(0.0)
}

fn check_paired(theta: &[f64], phi: &[f64]) -> Result<()> {
    if theta.len() != phi.len() {
        return Err(Error::InvalidParameter(format!(
            "coordinate lengths differ: {} vs {}",
            theta.len(),
            phi.len()
        )));
    }
    if theta.len() < 2 {
        return Err(Error::DegenerateData("need at least 2 angle pairs".into()));
    }
    Ok(())
}

/// Sample Jammalamadaka-Sarma correlation: sines about the sample circular
/// means. The means are taken from `atan2` of the mean sine and cosine
/// directly; a zero resultant is tolerated here (any reference direction
/// gives the same statistic up to the degenerate-denominator guard).
pub fn sample_rho_js(theta: &[f64], phi: &[f64]) -> Result<f64> {
    check_paired(theta, phi)?;
    let (st, ct) = mean_sin_cos(theta);
    let (sp, cp) = mean_sin_cos(phi);
    let t_bar = st.atan2(ct);
    let p_bar = sp.atan2(cp);

    let mut s_tp = 0.0;
    let mut s_tt = 0.0;
    let mut s_pp = 0.0;
    for (&t, &p) in theta.iter().zip(phi) {
        let a = (t - t_bar).sin();
        let b = (p - p_bar).sin();
        s_tp += a * b;
        s_tt += a * a;
        s_pp += b * b;
    }
    if s_tt <= DEGENERATE_EPS || s_pp <= DEGENERATE_EPS {
        return Err(Error::DegenerateData(format!(
            "sine second moments vanish (sum sin^2: theta {s_tt:.3e}, phi {s_pp:.3e})"
        )));
    }
    // Cauchy-Schwarz holds exactly; clamp the last-ulp excess
    Ok((s_tp / (s_tt * s_pp).sqrt()).clamp(-1.0, 1.0))
}

/// Sample Fisher-Lee correlation via the linear-time reduction of the
/// pairwise U-statistic; equal to the O(n^2) pairwise form to within
/// floating-point roundoff.
pub fn sample_rho_fl(theta: &[f64], phi: &[f64]) -> Result<f64> {
    check_paired(theta, phi)?;
    let mut a_tp = 0.0; // sum cos t cos p
    let mut b_tp = 0.0; // sum sin t sin p
    let mut c_tp = 0.0; // sum cos t sin p
    let mut d_tp = 0.0; // sum sin t cos p
    let mut a_t = 0.0;
    let mut b_t = 0.0;
    let mut c_t = 0.0;
    let mut a_p = 0.0;
    let mut b_p = 0.0;
    let mut c_p = 0.0;
    for (&t, &p) in theta.iter().zip(phi) {
        let (st, ct) = t.sin_cos();
        let (sp, cp) = p.sin_cos();
        a_tp += ct * cp;
        b_tp += st * sp;
        c_tp += ct * sp;
        d_tp += st * cp;
        a_t += ct * ct;
        b_t += st * st;
        c_t += st * ct;
        a_p += cp * cp;
        b_p += sp * sp;
        c_p += sp * cp;
    }
    let num = a_tp * b_tp - c_tp * d_tp;
    let den_t = a_t * b_t - c_t * c_t;
    let den_p = a_p * b_p - c_p * c_p;
    let scale_t = a_t * b_t + c_t * c_t;
    let scale_p = a_p * b_p + c_p * c_p;
    if den_t <= DEGENERATE_EPS * scale_t.max(1.0) || den_p <= DEGENERATE_EPS * scale_p.max(1.0) {
        return Err(Error::DegenerateData(
            "pairwise sine second moments vanish (constant coordinate)".into(),
        ));
    }
    Ok((num / (den_t * den_p).sqrt()).clamp(-1.0, 1.0))
}

/// Which analytic quantity a Monte Carlo validation row tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    RhoJs,
    RhoFl,
    VarTheta,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantity::RhoJs => write!(f, "rho_js"),
            Quantity::RhoFl => write!(f, "rho_fl"),
            Quantity::VarTheta => write!(f, "var_theta"),
        }
    }
}

/// One analytic-vs-Monte-Carlo comparison row.
///
/// `estimate_se` is the standard deviation of the single-replicate
/// estimator across replicates (the convention behind the parenthetical
/// values reported alongside replicate means); `z_score` is
/// `(estimate_mean - analytic) / estimate_se`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McValidation {
    pub quantity: Quantity,
    pub analytic: f64,
    pub estimate_mean: f64,
    pub estimate_se: f64,
    pub replicates: usize,
    pub sample_size: usize,
    pub z_score: f64,
}

/// Replicated Gibbs sampling of `replicates` samples of `sample_size`
/// pairs, each replicate on its own RNG stream derived from the master
/// seed, reduced to mean/SE rows for `rho_js`, `rho_fl` and `var(Theta)`.
///
/// Replicates run in parallel; results are reduced in replicate order, so
/// the output is independent of scheduling.
pub fn mc_validate(
    params: &ModelParams,
    sample_size: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<McValidation>> {
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    if sample_size < 2 {
        return Err(Error::InvalidParameter(
            "need sample_size of at least 2".into(),
        ));
    }
    let report = correlation_report(params, &SeriesControl::default())?;

    let estimates: Vec<(f64, f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64, f64)> {
            let config = SamplerConfig::gibbs(seed).with_stream(r as u64);
            let s = sample_bivariate(params, sample_size, &config)?;
            Ok((
                sample_rho_js(&s.theta, &s.phi)?,
                sample_rho_fl(&s.theta, &s.phi)?,
                sample_circular_variance(&s.theta),
            ))
        })
        .collect::<Result<_>>()?;

    let reduce = |quantity: Quantity, analytic: f64, pick: fn(&(f64, f64, f64)) -> f64| {
        let vals: Vec<f64> = estimates.iter().map(pick).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let se = var.sqrt();
        McValidation {
            quantity,
            analytic,
            estimate_mean: mean,
            estimate_se: se,
            replicates,
            sample_size,
            z_score: (mean - analytic) / se,
        }
    };

    Ok(vec![
        reduce(Quantity::RhoJs, report.rho_js, |e| e.0),
        reduce(Quantity::RhoFl, report.rho_fl, |e| e.1),
        reduce(Quantity::VarTheta, report.var_theta, |e| e.2),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// O(n^2) pairwise oracle for the Fisher-Lee statistic.
    fn rho_fl_pairwise(theta: &[f64], phi: &[f64]) -> f64 {
        let n = theta.len();
        let mut num = 0.0;
        let mut den_t = 0.0;
        let mut den_p = 0.0;
        for i in 0..n {
            for j in 0..n {
                let st = (theta[i] - theta[j]).sin();
                let sp = (phi[i] - phi[j]).sin();
                num += st * sp;
                den_t += st * st;
                den_p += sp * sp;
            }
        }
        num / (den_t * den_p).sqrt()
    }

    #[test]
    fn circular_mean_examples() {
        let m = circular_mean(&[PI / 4.0, PI / 4.0]).unwrap();
        assert!((m - PI / 4.0).abs() < 1e-15);
        let m = circular_mean(&[1e-9, -1e-9]).unwrap();
        assert!(m.abs() < 1e-15);
        assert!(matches!(
            circular_mean(&[0.0, PI]),
            Err(Error::UndefinedMean { .. })
        ));
        assert!(circular_mean(&[]).is_err());
    }

    #[test]
    fn variance_examples() {
        assert_eq!(sample_circular_variance(&[0.7; 10]), 0.0);
        let v = sample_circular_variance(&[0.0, PI / 2.0, -PI, -PI / 2.0]);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn t_linear_data_is_exactly_one() {
        let theta = [PI / 2.0, -PI / 2.0];
        assert_eq!(sample_rho_js(&theta, &theta).unwrap(), 1.0);
        let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
        assert_eq!(sample_rho_js(&theta, &neg).unwrap(), -1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta: Vec<f64> = (0..100).map(|_| rng.random_range(-PI..PI)).collect();
        let neg: Vec<f64> = theta.iter().map(|t| wrap_angle(-t)).collect();
        assert_eq!(sample_rho_fl(&theta, &theta).unwrap(), 1.0);
        assert_eq!(sample_rho_fl(&theta, &neg).unwrap(), -1.0);
        assert_eq!(sample_rho_js(&theta, &theta).unwrap(), 1.0);
    }

    #[test]
    fn fl_fast_equals_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let n = rng.random_range(3..=100);
            let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            let phi: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            let fast = sample_rho_fl(&theta, &phi).unwrap();
            let slow = rho_fl_pairwise(&theta, &phi);
            assert!(
                (fast - slow).abs() <= 1e-10,
                "fast {fast} vs pairwise {slow} at n = {n}"
            );
        }
    }

    #[test]
    fn estimators_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(2..=60);
            let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            let phi: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            if let Ok(r) = sample_rho_js(&theta, &phi) {
                assert!((-1.0..=1.0).contains(&r));
            }
            if let Ok(r) = sample_rho_fl(&theta, &phi) {
                assert!((-1.0..=1.0).contains(&r));
            }
            let v = sample_circular_variance(&theta);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let theta: Vec<f64> = (0..200).map(|_| rng.random_range(-PI..PI)).collect();
        let phi: Vec<f64> = (0..200)
            .map(|i| wrap_angle(theta[i] * 0.7 + rng.random_range(-0.5..0.5)))
            .collect();
        let js = sample_rho_js(&theta, &phi).unwrap();
        let fl = sample_rho_fl(&theta, &phi).unwrap();
        for shift in [0.3, -1.9, 2.7] {
            let t2: Vec<f64> = theta.iter().map(|t| wrap_angle(t + shift)).collect();
            let p2: Vec<f64> = phi.iter().map(|p| wrap_angle(p + shift)).collect();
            assert!((sample_rho_js(&t2, &p2).unwrap() - js).abs() <= 1e-10);
            assert!((sample_rho_fl(&t2, &p2).unwrap() - fl).abs() <= 1e-10);
        }
    }

    #[test]
    fn degenerate_data_errors() {
        let constant = [0.4; 20];
        let other: Vec<f64> = (0..20).map(|i| i as f64 * 0.1 - 1.0).collect();
        assert!(matches!(
            sample_rho_js(&constant, &other),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            sample_rho_fl(&constant, &other),
            Err(Error::DegenerateData(_))
        ));
        assert!(sample_rho_js(&other, &[0.0; 3]).is_err());
    }

    #[test]
    fn mc_validate_smoke() {
        let params = ModelParams::sine(1.0, 1.0, 0.5).unwrap();
        let rows = mc_validate(&params, 10, 2, 7).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert_eq!(row.replicates, 2);
            assert_eq!(row.sample_size, 10);
            assert!(row.estimate_se >= 0.0);
            assert!(row.estimate_mean.is_finite());
        }
        // deterministic reduction
        let again = mc_validate(&params, 10, 2, 7).unwrap();
        assert_eq!(rows[0].estimate_mean, again[0].estimate_mean);
        assert_eq!(rows[2].estimate_se, again[2].estimate_se);
    }

    #[test]
    fn mc_validate_rejects_bad_shapes() {
        let params = ModelParams::sine(1.0, 1.0, 0.5).unwrap();
        assert!(mc_validate(&params, 10, 1, 7).is_err());
        assert!(mc_validate(&params, 1, 5, 7).is_err());
    }

    #[test]
    fn mc_validate_tracks_analytic_values() {
        let params = ModelParams::sine(1.0, 1.0, 0.5).unwrap();
        let rows = mc_validate(&params, 2000, 8, 41).unwrap();
        for row in &rows {
            assert!(
                (row.estimate_mean - row.analytic).abs() <= 5.0 * row.estimate_se,
                "{:?} drifted: mean {} vs analytic {} (se {})",
                row.quantity,
                row.estimate_mean,
                row.analytic,
                row.estimate_se
            );
        }
    }
}
