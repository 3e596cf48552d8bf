//! Modified Bessel functions of the first kind, integer order.
//!
//! Everything downstream consumes the scaled form `e^{-x} I_m(x)`, the
//! over-power form `I_m(x)/x^m`, or order-to-order ratios, so that
//! concentrations of several hundred never overflow. The workhorse is a
//! Miller-style downward recurrence on the ratios `I_{m+1}(x)/I_m(x)`,
//! normalized through the identity `e^x = I_0(x) + 2 * sum_m I_m(x)`;
//! forward recurrence is unstable in increasing order and is never used.
//! Small arguments (`x < 2`) go through the ascending power series.

use crate::error::{Error, Result};

/// Below this the over-power and ratio forms return their analytic limits,
/// avoiding 0/0 at the origin.
const TINY_X: f64 = 1e-8;

/// Arguments for the ascending power series branch.
const SERIES_X: f64 = 2.0;

/// `ln(f64::MAX)`, the unscaled-overflow boundary.
const LN_MAX: f64 = 709.782712893384;

/// Starting order for the downward ratio recurrence, high enough above both
/// the requested order and the turning point `m ~ x` that seed errors have
/// fully contracted by the time order `m_max` is reached.
fn start_order(x: f64, m_max: usize) -> usize {
    let base = (m_max as f64).max(x).max(1.0);
    (base + 40.0 + 2.5 * base.sqrt()).ceil() as usize
}

/// Ratios `r_m = I_{m+1}(x)/I_m(x)` for `m = 0..=m_max`. Requires `x > 0`.
///
/// Seeded with the uniform asymptotic ratio at a guarded high order and
/// recursed down through `r_{m} = 1/(2(m+1)/x + r_{m+1})`; every iterate
/// stays in `(0, 1)`, so no rescaling is ever needed.
fn ratio_seq(x: f64, m_max: usize) -> Vec<f64> {
    debug_assert!(x > 0.0);
    let start = start_order(x, m_max);
    let nu = (start + 1) as f64;
    let mut r = x / (nu + (nu * nu + x * x).sqrt());
    let mut out = vec![0.0; m_max + 1];
    for m in (0..=start).rev() {
        r = 1.0 / (2.0 * (m as f64 + 1.0) / x + r);
        if m <= m_max {
            out[m] = r;
        }
    }
    out
}

/// Scaled values `e^{-x} I_m(x)` for `m = 0..=m_max`.
///
/// Values that genuinely underflow f64 (orders far above `x`) come back as
/// zero.
pub(crate) fn scaled_seq(x: f64, m_max: usize) -> Vec<f64> {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        let mut v = vec![0.0; m_max + 1];
        v[0] = 1.0;
        return v;
    }
    // Ratios must reach far enough for the normalization sum to converge,
    // not just to m_max.
    let norm_len = m_max.max(start_order(x, 0));
    let ratios = ratio_seq(x, norm_len);

    // e^{-x} (I_0 + 2 sum_{m>=1} I_m) = 1, expressed through the ratio
    // products p_m = I_m/I_0.
    let mut norm = 1.0;
    let mut p = 1.0;
    for &r in &ratios {
        p *= r;
        norm += 2.0 * p;
        if p < 1e-18 * norm {
            break;
        }
    }
    let i0 = 1.0 / norm;

    let mut out = Vec::with_capacity(m_max + 1);
    out.push(i0);
    let mut v = i0;
    for &r in &ratios[..m_max] {
        v *= r;
        out.push(v);
    }
    out
}

/// Ratios `I_{m+1}(x) / (x I_m(x))` for `m = 0..=m_max`, continuous at
/// `x = 0` with value `1/(2(m+1))`.
///
/// These are the building blocks of the sine-model series: they absorb the
/// `1/(kappa1 kappa2)^m` power so that zero concentrations need no special
/// casing beyond the analytic limit.
pub(crate) fn ratio_over_x_seq(x: f64, m_max: usize) -> Vec<f64> {
    debug_assert!(x >= 0.0);
    if x < TINY_X {
        // relative error O(x^2) from the dropped series correction
        return (0..=m_max).map(|m| 0.5 / (m as f64 + 1.0)).collect();
    }
    ratio_seq(x, m_max).iter().map(|r| r / x).collect()
}

/// Ascending power series for `I_m(x)`; accurate and overflow-free for
/// `x < 2` at any order.
fn series_i(order: u32, x: f64) -> f64 {
    let m = order as f64;
    // (x/2)^m / m! as a running product so neither factor overflows alone
    let mut t = 1.0;
    for k in 1..=order {
        t *= 0.5 * x / k as f64;
    }
    let q = 0.25 * x * x;
    let mut sum = t;
    let mut k = 0.0;
    while t > 0.0 {
        t *= q / ((k + 1.0) * (k + 1.0 + m));
        let next = sum + t;
        if next == sum {
            break;
        }
        sum = next;
        k += 1.0;
    }
    sum
}

/// Ascending power series for `I_m(x)/x^m`, exact-limit at the origin.
fn series_i_over_power(order: u32, x: f64) -> f64 {
    // leading coefficient 1/(2^m m!)
    let mut t = 1.0;
    for k in 1..=order {
        t /= 2.0 * k as f64;
    }
    let m = order as f64;
    let q = 0.25 * x * x;
    let mut sum = t;
    let mut k = 0.0;
    loop {
        t *= q / ((k + 1.0) * (k + 1.0 + m));
        let next = sum + t;
        if next == sum {
            break;
        }
        sum = next;
        k += 1.0;
    }
    sum
}

/// `I_m(x)` for `x >= 0`.
///
/// Relative accuracy is better than 1e-13 for `x <= 50`; for larger
/// arguments use [`bessel_i_scaled`] and do the exponent bookkeeping
/// explicitly. Errors with [`Error::BesselOverflow`] once the value leaves
/// the f64 range (`x` around 700 and above for low orders).
pub fn bessel_i(order: u32, x: f64) -> Result<f64> {
    assert!(x >= 0.0, "bessel_i requires x >= 0, got {x}");
    if x < SERIES_X {
        return Ok(series_i(order, x));
    }
    let s = bessel_i_scaled(order, x);
    if s == 0.0 {
        return Ok(0.0);
    }
    let ln = x + s.ln();
    if ln >= LN_MAX {
        return Err(Error::BesselOverflow { order, x });
    }
    if x < LN_MAX {
        Ok(s * x.exp())
    } else {
        Ok(ln.exp())
    }
}

/// `e^{-x} I_m(x)`: finite for every representable `x >= 0`, strictly
/// decreasing in the order for fixed `x > 0`.
pub fn bessel_i_scaled(order: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i_scaled requires x >= 0, got {x}");
    if x < SERIES_X {
        return series_i(order, x) * (-x).exp();
    }
    scaled_seq(x, order as usize)[order as usize]
}

/// `I_m(x)/x^m`, continuous at `x = 0` with the series-exact limit
/// `1/(2^m m!)`.
pub fn bessel_i_over_power(order: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i_over_power requires x >= 0, got {x}");
    if x < TINY_X {
        let mut v = 1.0;
        for k in 1..=order {
            v /= 2.0 * k as f64;
        }
        return v;
    }
    if x < SERIES_X {
        return series_i_over_power(order, x);
    }
    let s = bessel_i_scaled(order, x);
    if s == 0.0 {
        // for x >= 2 the over-power value underflows whenever I_m does
        return 0.0;
    }
    let ln = x + s.ln() - order as f64 * x.ln();
    ln.exp()
}

/// `A(x) = I_1(x)/I_0(x)`, in `[0, 1)` and strictly increasing; computed as
/// a pure ratio, never forming unscaled Bessel values.
pub fn bessel_ratio(x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_ratio requires x >= 0, got {x}");
    if x == 0.0 {
        return 0.0;
    }
    if x < TINY_X {
        return 0.5 * x;
    }
    ratio_seq(x, 0)[0]
}
