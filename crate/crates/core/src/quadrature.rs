//! Independent torus-integration oracle.
//!
//! Uniform-grid (periodic trapezoid) quadrature on `[-pi, pi)^2`, which is
//! spectrally convergent for smooth periodic integrands. This module shares
//! no code path with the series evaluators; it exists so that every
//! normalizing constant, partial-derivative ratio, moment, density
//! normalization and conditional can be checked against a plain double
//! integral. Oracle routines are test and diagnostics machinery, not part
//! of the library's stability surface.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::moments::TrigMoments;

/// Per-axis resolution cap for the doubling driver.
pub const RESOLUTION_CAP: usize = 4096;

/// Relative agreement demanded between successive grid doublings.
const DOUBLING_RTOL: f64 = 1e-10;

/// Starting grid for the doubling driver (points per axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { resolution: 64 }
    }
}

impl GridSpec {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be at least 8, got {resolution}"
            )));
        }
        Ok(GridSpec { resolution })
    }
}

/// Sum with compensated (Kahan) accumulation in a fixed order.
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn new() -> Self {
        Kahan {
            sum: 0.0,
            carry: 0.0,
        }
    }

    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// One uniform-grid pass at `n` points per axis.
pub fn integrate_torus_fixed<F: Fn(f64, f64) -> f64>(f: &F, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let mut total = Kahan::new();
    for i in 0..n {
        let theta = -PI + i as f64 * h;
        let mut row = Kahan::new();
        for j in 0..n {
            let phi = -PI + j as f64 * h;
            row.add(f(theta, phi));
        }
        total.add(row.sum);
    }
    total.sum * h * h
}

/// Integrate a smooth periodic integrand over the torus, doubling the grid
/// from `grid.resolution` until successive values agree to 1e-10 relative
/// (with an absolute floor tied to the integrand magnitude), capped at
/// [`RESOLUTION_CAP`] points per axis.
pub fn integrate_torus<F: Fn(f64, f64) -> f64>(f: F, grid: GridSpec) -> Result<f64> {
    let mut n = grid.resolution.max(8);
    let mut prev = integrate_torus_fixed(&f, n);
    let mut fmax: f64 = 0.0;
    // cheap magnitude probe for the absolute convergence floor
    for i in 0..16 {
        for j in 0..16 {
            let v = f(-PI + i as f64 * PI / 8.0, -PI + j as f64 * PI / 8.0).abs();
            if v > fmax {
                fmax = v;
            }
        }
    }
    let atol = 1e-12 * fmax * 4.0 * PI * PI;
    while n < RESOLUTION_CAP {
        n *= 2;
        let next = integrate_torus_fixed(&f, n);
        if (next - prev).abs() <= DOUBLING_RTOL * next.abs() + atol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::ResolutionCap {
        cap: RESOLUTION_CAP,
    })
}

/// Torus integral of the unnormalized model density: the normalizing
/// constant, computed with no reference to the Bessel series.
pub fn oracle_constant(params: &ModelParams, grid: GridSpec) -> Result<f64> {
    integrate_torus(|t, p| params.log_unnormalized_density(t, p).exp(), grid)
}

/// Trigonometric moments by quadrature, plus the two cross-moments that
/// vanish by marginal symmetry (returned so the vanishing itself can be
/// asserted).
#[derive(Debug, Clone, Copy)]
pub struct OracleMoments {
    pub moments: TrigMoments,
    pub e_sin_phi_cos_theta: f64,
    pub e_sin_theta_cos_phi: f64,
}

/// Weighted torus integrals of the unnormalized density, normalized by the
/// constant. All nine integrals share one density evaluation per grid node
/// and one doubling loop.
pub fn oracle_moments(params: &ModelParams, grid: GridSpec) -> Result<OracleMoments> {
    const NW: usize = 9;
    let pass = |n: usize| -> [f64; NW] {
        let h = 2.0 * PI / n as f64;
        let mut total = [0.0f64; NW];
        let mut rows: Vec<Kahan> = Vec::new();
        for i in 0..n {
            let theta = -PI + i as f64 * h;
            let t = theta - params.mu1;
            let (st, ct) = t.sin_cos();
            rows.clear();
            rows.resize_with(NW, Kahan::new);
            for j in 0..n {
                let phi = -PI + j as f64 * h;
                let p = phi - params.mu2;
                let (sp, cp) = p.sin_cos();
                let dens = params.log_unnormalized_density(theta, phi).exp();
                let w = [
                    1.0,
                    ct,
                    cp,
                    ct * ct,
                    cp * cp,
                    st * sp,
                    ct * cp,
                    sp * ct,
                    st * cp,
                ];
                for (k, row) in rows.iter_mut().enumerate() {
                    row.add(w[k] * dens);
                }
            }
            for k in 0..NW {
                total[k] += rows[k].sum;
            }
        }
        total.map(|v| v * h * h)
    };

    let mut n = grid.resolution.max(8);
    let mut prev = pass(n);
    loop {
        if n >= RESOLUTION_CAP {
            return Err(Error::ResolutionCap {
                cap: RESOLUTION_CAP,
            });
        }
        n *= 2;
        let next = pass(n);
        let scale = next[0].abs();
        let ok = (0..NW).all(|k| (next[k] - prev[k]).abs() <= DOUBLING_RTOL * scale);
        if ok {
            let c = next[0];
            return Ok(OracleMoments {
                moments: TrigMoments {
                    e_cos_t: next[1] / c,
                    e_cos_p: next[2] / c,
                    e_cos2_t: next[3] / c,
                    e_cos2_p: next[4] / c,
                    e_ss: next[5] / c,
                    e_cc: next[6] / c,
                },
                e_sin_phi_cos_theta: next[7] / c,
                e_sin_theta_cos_phi: next[8] / c,
            });
        }
        prev = next;
    }
}
