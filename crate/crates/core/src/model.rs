//! Model parameter types shared by the series, moment, sampling and
//! quadrature code.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which bivariate von Mises variant a parameter set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Interaction term `lambda * sin(theta - mu1) * sin(phi - mu2)`.
    Sine,
    /// Interaction term `kappa3 * cos(theta - mu1 - phi + mu2)`.
    Cosine,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Sine => write!(f, "sine"),
            Family::Cosine => write!(f, "cosine"),
        }
    }
}

/// Parameters of a bivariate von Mises sine or cosine model.
///
/// `assoc` is the association ("covariance") parameter: `lambda` for the
/// sine family, `kappa3` for the cosine family. It is unrestricted in sign
/// and magnitude; the concentrations must be non-negative. Mean directions
/// are wrapped into `[-pi, pi)` on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub family: Family,
    pub mu1: f64,
    pub mu2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub assoc: f64,
}

impl ModelParams {
    pub fn new(
        family: Family,
        mu1: f64,
        mu2: f64,
        kappa1: f64,
        kappa2: f64,
        assoc: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("mu1", mu1),
            ("mu2", mu2),
            ("kappa1", kappa1),
            ("kappa2", kappa2),
            ("assoc", assoc),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} is not finite"
                )));
            }
        }
        if kappa1 < 0.0 || kappa2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "concentrations must be non-negative (kappa1 = {kappa1}, kappa2 = {kappa2})"
            )));
        }
        Ok(Self {
            family,
            mu1: wrap_angle(mu1),
            mu2: wrap_angle(mu2),
            kappa1,
            kappa2,
            assoc,
        })
    }

    /// Sine model with association `lambda`, means at zero.
    pub fn sine(kappa1: f64, kappa2: f64, lambda: f64) -> Result<Self> {
        Self::new(Family::Sine, 0.0, 0.0, kappa1, kappa2, lambda)
    }

    /// Cosine model with association `kappa3`, means at zero.
    pub fn cosine(kappa1: f64, kappa2: f64, kappa3: f64) -> Result<Self> {
        Self::new(Family::Cosine, 0.0, 0.0, kappa1, kappa2, kappa3)
    }

    pub fn with_means(mut self, mu1: f64, mu2: f64) -> Self {
        self.mu1 = wrap_angle(mu1);
        self.mu2 = wrap_angle(mu2);
        self
    }
}

/// Truncation policy for the normalizing-constant series.
///
/// A series stops once `consecutive_small` successive terms fall below
/// `rel_tol` times its running sum; the bundle is flagged non-converged if
/// any of the series fails to do so within `max_terms` terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub consecutive_small: usize,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            consecutive_small: 3,
            max_terms: 20_000,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_terms < 1 {
            return Err(Error::InvalidParameter(
                "max_terms must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl ModelParams {
    /// Log of the unnormalized density, i.e. the exponent of the model
    /// density before dividing by the normalizing constant.
    pub fn log_unnormalized_density(&self, theta: f64, phi: f64) -> f64 {
        let t = theta - self.mu1;
        let p = phi - self.mu2;
        let base = self.kappa1 * t.cos() + self.kappa2 * p.cos();
        match self.family {
            Family::Sine => base + self.assoc * t.sin() * p.sin(),
            Family::Cosine => base + self.assoc * (t - p).cos(),
        }
    }

    /// Upper bound of the exponent over the torus; the rejection envelope.
    pub fn exponent_bound(&self) -> f64 {
        self.kappa1 + self.kappa2 + self.assoc.abs()
    }
}

/// Wrap an angle into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = x - two_pi * ((x + PI) / two_pi).floor();
    // floor rounding can land exactly on pi
    if w >= PI {
        w - two_pi
    } else if w < -PI {
        w + two_pi
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_covers_boundaries() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * PI) - (-PI)).abs() < 1e-12);
        for k in -20..=20 {
            let x = 0.37 + k as f64 * 2.0 * PI;
            let w = wrap_angle(x);
            assert!((-PI..PI).contains(&w));
            assert!((w - 0.37).abs() < 1e-9, "wrap({x}) = {w}");
        }
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(ModelParams::sine(-1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::cosine(1.0, f64::NAN, 0.0).is_err());
        assert!(ModelParams::sine(1.0, 1.0, f64::INFINITY).is_err());
        let p = ModelParams::sine(1.0, 2.0, -3.0).unwrap();
        assert_eq!(p.family, Family::Sine);
        assert_eq!(p.assoc, -3.0);
    }

    #[test]
    fn means_are_wrapped() {
        let p = ModelParams::sine(1.0, 1.0, 0.5)
            .unwrap()
            .with_means(4.0, -4.0);
        assert!((-PI..PI).contains(&p.mu1));
        assert!((-PI..PI).contains(&p.mu2));
    }
}
