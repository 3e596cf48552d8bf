//! Normalizing constants of the sine and cosine models and their partial
//! derivatives, evaluated as convergent modified-Bessel series.
//!
//! All seven (sine) or eight (cosine) series share a single loop over the
//! series order so Bessel values are computed once per order. Terms are
//! formed in scaled space: a common factor `e^{log_scale_exponent}` is split
//! out of every stored field, so concentrations of several hundred stay
//! representable and downstream ratios are exact because the common
//! exponent cancels.
//!
//! Sine-model terms are built from the over-power ratios
//! `I_{m+1}(x)/(x I_m(x))`, which absorb the `(lambda^2/4 k1 k2)^m` power;
//! zero concentrations therefore need no special casing beyond the analytic
//! limit of the ratio. The binomial factor `C(2m,m)/4^m` rides along through
//! the stable recurrence `t_{m+1} = t_m (2m+1)/(2m+2)`.
//!
//! Negative cosine association is folded through
//! `I_m(k3) = (-1)^m I_m(|k3|)`, which makes those series alternating; the
//! truncation rule demands several consecutive small terms for exactly that
//! reason.

use std::f64::consts::PI;

use crate::bessel::{ratio_over_x_seq, scaled_seq};
use crate::error::{Error, Result};
use crate::model::{Family, ModelParams, SeriesControl};

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Rescale accumulators once the running core term passes this magnitude.
const RESCALE_AT: f64 = 1e270;
/// Exact power-of-two factor applied when rescaling (keeps sign-flip
/// symmetries bit-exact).
const RESCALE_FACTOR: f64 = 2.2250738585072014e-181; // 2^-600
const RESCALE_LN: f64 = 600.0 * std::f64::consts::LN_2;

/// Normalizing constant `C` and its partial derivatives, stored with a
/// common factor `e^{log_scale_exponent}` split out.
///
/// `c` is `C * e^{-log_scale_exponent}`; the `d_*` fields are the matching
/// scaled partials with respect to `kappa1`, `kappa2`, the association
/// parameter, and the second derivatives. `d_assoc_minus_d_k1k2` holds
/// `dC/d(assoc) - d2C/(dk1 dk2)`; for the cosine family it is accumulated
/// from its own difference series rather than by subtraction, which keeps
/// the sign law intact when the two terms nearly cancel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesBundle {
    pub family: Family,
    pub c: f64,
    pub d_k1: f64,
    pub d_k2: f64,
    pub d_assoc: f64,
    pub d_k1k1: f64,
    pub d_k2k2: f64,
    pub d_k1k2: f64,
    pub d_assoc_minus_d_k1k2: f64,
    pub terms_used: usize,
    pub converged: bool,
    pub log_scale_exponent: f64,
}

impl SeriesBundle {
    /// Natural log of the unscaled normalizing constant.
    pub fn ln_constant(&self) -> f64 {
        self.c.ln() + self.log_scale_exponent
    }

    /// Unscaled normalizing constant; may overflow to infinity for very
    /// large concentrations, in which case use [`SeriesBundle::ln_constant`].
    pub fn constant(&self) -> f64 {
        if self.log_scale_exponent == 0.0 {
            self.c
        } else if self.log_scale_exponent.abs() < 500.0 {
            self.c * self.log_scale_exponent.exp()
        } else {
            self.ln_constant().exp()
        }
    }
}

/// Per-series truncation bookkeeping.
#[derive(Clone, Copy)]
struct Acc {
    sum: f64,
    small_run: usize,
    max_term: f64,
}

impl Acc {
    const fn new() -> Self {
        Acc {
            sum: 0.0,
            small_run: 0,
            max_term: 0.0,
        }
    }

    fn add(&mut self, term: f64, rel_tol: f64) {
        self.sum += term;
        if term.abs() > self.max_term {
            self.max_term = term.abs();
        }
        if term.abs() <= rel_tol * self.sum.abs() {
            self.small_run += 1;
        } else {
            self.small_run = 0;
        }
    }

    /// Alternating sums can cancel to far below their term scale; once the
    /// ratio drops under f64 working precision the digits are gone.
    fn cancellation_check(&self) -> Result<()> {
        const MIN_RATIO: f64 = 1e-10;
        if self.max_term > 0.0 && self.sum.abs() < MIN_RATIO * self.max_term {
            return Err(Error::PrecisionLoss {
                sum_to_term_ratio: self.sum.abs() / self.max_term,
            });
        }
        Ok(())
    }
}

/// Evaluate the bundle for either family.
pub fn series_bundle(params: &ModelParams, control: &SeriesControl) -> Result<SeriesBundle> {
    match params.family {
        Family::Sine => sine_bundle(params, control),
        Family::Cosine => cosine_bundle(params, control),
    }
}

/// Sine-model normalizing constant and partial derivatives.
///
/// All fields are even in the association parameter except `d_assoc`, which
/// is odd; the implementation preserves this bit-exactly because the sign
/// of lambda enters exactly one factor of the assoc term.
pub fn sine_bundle(params: &ModelParams, control: &SeriesControl) -> Result<SeriesBundle> {
    assert_eq!(
        params.family,
        Family::Sine,
        "sine_bundle requires sine-family params"
    );
    control.validate()?;
    let (k1, k2, lambda) = (params.kappa1, params.kappa2, params.assoc);
    let lambda_sq = lambda * lambda;

    // ratio tables grow geometrically as the loop demands higher orders
    let mut cap = 80usize;
    let mut r1 = ratio_over_x_seq(k1, cap + 1);
    let mut r2 = ratio_over_x_seq(k2, cap + 1);

    let mut exponent = k1 + k2;
    // core term: C(2m,m)/4^m * lambda^{2m} * I_m(k1)/k1^m * I_m(k2)/k2^m,
    // scaled by e^{-k1-k2}; at m = 0 this is the product of scaled I_0s.
    let mut g = scaled_seq(k1, 0)[0] * scaled_seq(k2, 0)[0];

    let mut acc = [Acc::new(); 7];
    const C: usize = 0;
    const DK1: usize = 1;
    const DK2: usize = 2;
    const DA: usize = 3;
    const DK1K1: usize = 4;
    const DK2K2: usize = 5;
    const DK1K2: usize = 6;

    let mut converged = false;
    let mut terms_used = control.max_terms;
    for m in 0..control.max_terms {
        if m + 1 > cap {
            cap *= 2;
            r1 = ratio_over_x_seq(k1, cap + 1);
            r2 = ratio_over_x_seq(k2, cap + 1);
        }
        let c1 = k1 * r1[m];
        let c2 = k2 * r2[m];

        acc[C].add(g, control.rel_tol);
        acc[DK1].add(g * c1, control.rel_tol);
        acc[DK2].add(g * c2, control.rel_tol);
        acc[DK1K2].add(g * (c1 * c2), control.rel_tol);
        acc[DK1K1].add(g * (r1[m] * (1.0 + k1 * k1 * r1[m + 1])), control.rel_tol);
        acc[DK2K2].add(g * (r2[m] * (1.0 + k2 * k2 * r2[m + 1])), control.rel_tol);
        let da_term = if m == 0 || lambda == 0.0 {
            0.0
        } else {
            (2.0 * m as f64 / lambda) * g
        };
        acc[DA].add(da_term, control.rel_tol);

        if acc.iter().all(|a| a.small_run >= control.consecutive_small) {
            converged = true;
            terms_used = m + 1;
            break;
        }

        g *= (2.0 * m as f64 + 1.0) / (2.0 * m as f64 + 2.0) * lambda_sq * (r1[m] * r2[m]);
        if g > RESCALE_AT {
            g *= RESCALE_FACTOR;
            for a in acc.iter_mut() {
                a.sum *= RESCALE_FACTOR;
                a.max_term *= RESCALE_FACTOR;
            }
            exponent += RESCALE_LN;
        }
    }

    if !converged {
        return Err(Error::SeriesNonConvergence {
            terms_used,
            max_terms: control.max_terms,
        });
    }

    let d_assoc = FOUR_PI_SQ * acc[DA].sum;
    let d_k1k2 = FOUR_PI_SQ * acc[DK1K2].sum;
    Ok(SeriesBundle {
        family: Family::Sine,
        c: FOUR_PI_SQ * acc[C].sum,
        d_k1: FOUR_PI_SQ * acc[DK1].sum,
        d_k2: FOUR_PI_SQ * acc[DK2].sum,
        d_assoc,
        d_k1k1: FOUR_PI_SQ * acc[DK1K1].sum,
        d_k2k2: FOUR_PI_SQ * acc[DK2K2].sum,
        d_k1k2,
        d_assoc_minus_d_k1k2: d_assoc - d_k1k2,
        terms_used,
        converged,
        log_scale_exponent: exponent,
    })
}

/// Cosine-model normalizing constant and partial derivatives.
///
/// Negative `kappa3` is handled through `I_m(k3) = (-1)^m I_m(|k3|)`. The
/// quantity `dC/dk3 - d2C/(dk1 dk2)` is accumulated from the factored
/// difference series `2 pi^2 sum_m [I_{m-1}(k1) - I_{m+1}(k1)]
/// [I_{m-1}(k2) - I_{m+1}(k2)] I_m(k3)`, whose term signs follow `I_m(k3)`
/// alone; this keeps `sign(E sin sin) = sign(k3)` exact even where the two
/// parent series nearly cancel.
pub fn cosine_bundle(params: &ModelParams, control: &SeriesControl) -> Result<SeriesBundle> {
    assert_eq!(
        params.family,
        Family::Cosine,
        "cosine_bundle requires cosine-family params"
    );
    control.validate()?;
    let (k1, k2, k3) = (params.kappa1, params.kappa2, params.assoc);
    let k3_abs = k3.abs();
    let neg = k3 < 0.0;

    let mut cap = 80usize;
    let mut a = scaled_seq(k1, cap + 2);
    let mut b = scaled_seq(k2, cap + 2);
    let mut d = scaled_seq(k3_abs, cap + 2);

    let exponent = k1 + k2 + k3_abs;

    let mut acc = [Acc::new(); 8];
    const C: usize = 0;
    const DK1: usize = 1;
    const DK2: usize = 2;
    const DA: usize = 3;
    const DK1K1: usize = 4;
    const DK2K2: usize = 5;
    const DK1K2: usize = 6;
    const AMC: usize = 7;

    // boundary terms of each series, in units of 4 pi^2
    acc[C].add(a[0] * b[0] * d[0], control.rel_tol);
    acc[DK1].add(a[1] * b[0] * d[0], control.rel_tol);
    acc[DK2].add(a[0] * b[1] * d[0], control.rel_tol);
    let sgn1 = if neg { -1.0 } else { 1.0 };
    acc[DA].add(sgn1 * (a[0] * b[0]) * d[1], control.rel_tol);
    acc[DK1K1].add(0.5 * (a[0] + a[2]) * b[0] * d[0], control.rel_tol);
    acc[DK2K2].add(0.5 * a[0] * (b[0] + b[2]) * d[0], control.rel_tol);
    acc[DK1K2].add((a[1] * b[1]) * d[0], control.rel_tol);
    acc[AMC].add(0.0, control.rel_tol);

    let mut converged = false;
    let mut terms_used = control.max_terms;
    for m in 1..control.max_terms {
        if m + 2 > cap {
            cap *= 2;
            a = scaled_seq(k1, cap + 2);
            b = scaled_seq(k2, cap + 2);
            d = scaled_seq(k3_abs, cap + 2);
        }
        // sign of I_m(k3) and of I_{m +/- 1}(k3)
        let sm = if neg && m % 2 == 1 { -1.0 } else { 1.0 };
        let sm1 = if neg { -sm } else { 1.0 };
        let a_sum = a[m + 1] + a[m - 1];
        let b_sum = b[m + 1] + b[m - 1];
        let a_dif = a[m - 1] - a[m + 1];
        let b_dif = b[m - 1] - b[m + 1];
        // negative orders fold back: I_{-n} = I_n
        let a_dd = a[m.abs_diff(2)] + 2.0 * a[m] + a[m + 2];
        let b_dd = b[m.abs_diff(2)] + 2.0 * b[m] + b[m + 2];

        acc[C].add(2.0 * sm * (a[m] * b[m]) * d[m], control.rel_tol);
        acc[DK1].add(sm * (b[m] * d[m]) * a_sum, control.rel_tol);
        acc[DK2].add(sm * (a[m] * d[m]) * b_sum, control.rel_tol);
        acc[DA].add(sm1 * (a[m] * b[m]) * (d[m + 1] + d[m - 1]), control.rel_tol);
        acc[DK1K1].add(0.5 * sm * (b[m] * d[m]) * a_dd, control.rel_tol);
        acc[DK2K2].add(0.5 * sm * (a[m] * d[m]) * b_dd, control.rel_tol);
        acc[DK1K2].add(0.5 * sm * d[m] * (a_sum * b_sum), control.rel_tol);
        acc[AMC].add(0.5 * sm * d[m] * (a_dif * b_dif), control.rel_tol);

        if acc.iter().all(|x| x.small_run >= control.consecutive_small) {
            converged = true;
            terms_used = m + 1;
            break;
        }
    }

    if !converged {
        return Err(Error::SeriesNonConvergence {
            terms_used,
            max_terms: control.max_terms,
        });
    }
    // negative k3 makes every series alternate; refuse to return noise when
    // the constant has cancelled below working precision
    acc[C].cancellation_check()?;

    Ok(SeriesBundle {
        family: Family::Cosine,
        c: FOUR_PI_SQ * acc[C].sum,
        d_k1: FOUR_PI_SQ * acc[DK1].sum,
        d_k2: FOUR_PI_SQ * acc[DK2].sum,
        d_assoc: FOUR_PI_SQ * acc[DA].sum,
        d_k1k1: FOUR_PI_SQ * acc[DK1K1].sum,
        d_k2k2: FOUR_PI_SQ * acc[DK2K2].sum,
        d_k1k2: FOUR_PI_SQ * acc[DK1K2].sum,
        d_assoc_minus_d_k1k2: FOUR_PI_SQ * acc[AMC].sum,
        terms_used,
        converged,
        log_scale_exponent: exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sine(k1: f64, k2: f64, l: f64) -> SeriesBundle {
        sine_bundle(
            &ModelParams::sine(k1, k2, l).unwrap(),
            &SeriesControl::default(),
        )
        .unwrap()
    }

    fn cosine(k1: f64, k2: f64, k3: f64) -> SeriesBundle {
        cosine_bundle(
            &ModelParams::cosine(k1, k2, k3).unwrap(),
            &SeriesControl::default(),
        )
        .unwrap()
    }

    #[test]
    fn sine_uniform_limit() {
        let b = sine(0.0, 0.0, 0.0);
        assert_relative_eq!(b.constant(), FOUR_PI_SQ, max_relative = 1e-14);
        assert_eq!(b.d_k1, 0.0);
        assert_eq!(b.d_k2, 0.0);
        assert_eq!(b.d_assoc, 0.0);
        assert_eq!(b.d_k1k2, 0.0);
        assert_relative_eq!(b.d_k1k1 / b.c, 0.5, max_relative = 1e-14);
        assert_relative_eq!(b.d_k2k2 / b.c, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn cosine_uniform_limit() {
        let b = cosine(0.0, 0.0, 0.0);
        assert_relative_eq!(b.constant(), FOUR_PI_SQ, max_relative = 1e-14);
        assert_eq!(b.d_assoc, 0.0);
        assert_eq!(b.d_assoc_minus_d_k1k2, 0.0);
        assert_relative_eq!(b.d_k1k1 / b.c, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn cosine_zero_assoc_factorizes() {
        // k3 = 0 makes the coordinates independent von Mises
        let b = cosine(1.7, 0.6, 0.0);
        let i0k1 = crate::bessel::bessel_i(0, 1.7).unwrap();
        let i0k2 = crate::bessel::bessel_i(0, 0.6).unwrap();
        assert_relative_eq!(b.constant(), FOUR_PI_SQ * i0k1 * i0k2, max_relative = 1e-13);
        assert_eq!(b.d_assoc_minus_d_k1k2, 0.0);
    }

    #[test]
    fn swap_symmetry_is_exact() {
        for (k1, k2, l) in [(0.3, 2.0, 0.7), (1.0, 10.0, -4.0), (0.0, 3.0, 1.2)] {
            let a = sine(k1, k2, l);
            let b = sine(k2, k1, l);
            assert_eq!(a.c, b.c);
            assert_eq!(a.d_k1, b.d_k2);
            assert_eq!(a.d_k2, b.d_k1);
            assert_eq!(a.d_k1k1, b.d_k2k2);
            assert_eq!(a.d_k2k2, b.d_k1k1);
            assert_eq!(a.d_k1k2, b.d_k1k2);
            assert_eq!(a.d_assoc, b.d_assoc);
        }
        for (k1, k2, k3) in [(0.3, 2.0, 0.7), (1.0, 10.0, -4.0), (0.0, 3.0, 1.2)] {
            let a = cosine(k1, k2, k3);
            let b = cosine(k2, k1, k3);
            assert_eq!(a.c, b.c);
            assert_eq!(a.d_k1, b.d_k2);
            assert_eq!(a.d_k1k1, b.d_k2k2);
            assert_eq!(a.d_k1k2, b.d_k1k2);
            assert_eq!(a.d_assoc_minus_d_k1k2, b.d_assoc_minus_d_k1k2);
        }
    }

    #[test]
    fn lambda_flip_is_exact() {
        for &k1 in &[0.1, 1.0, 10.0] {
            for &k2 in &[0.1, 1.0, 10.0] {
                for &l in &[0.5, 2.0, 20.0] {
                    let plus = sine(k1, k2, l);
                    let minus = sine(k1, k2, -l);
                    assert_eq!(plus.c, minus.c);
                    assert_eq!(plus.d_k1, minus.d_k1);
                    assert_eq!(plus.d_k2, minus.d_k2);
                    assert_eq!(plus.d_k1k1, minus.d_k1k1);
                    assert_eq!(plus.d_k2k2, minus.d_k2k2);
                    assert_eq!(plus.d_k1k2, minus.d_k1k2);
                    assert_eq!(plus.d_assoc, -minus.d_assoc);
                }
            }
        }
    }

    #[test]
    fn sine_sign_law_inputs() {
        for &l in &[-20.0, -2.0, -0.5, 0.0, 0.5, 2.0, 20.0] {
            for &k in &[0.0, 0.1, 1.0, 10.0] {
                let b = sine(k, k, l);
                assert_eq!(b.d_assoc > 0.0, l > 0.0, "k={k}, l={l}");
                assert_eq!(b.d_assoc < 0.0, l < 0.0, "k={k}, l={l}");
            }
        }
    }

    #[test]
    fn cosine_sign_law_inputs() {
        for &k3 in &[-20.0, -2.0, -0.5, 0.0, 0.5, 2.0, 20.0] {
            for &k in &[0.0, 0.1, 1.0, 10.0] {
                let b = cosine(k, k, k3);
                let g = b.d_assoc_minus_d_k1k2;
                assert_eq!(g > 0.0, k3 > 0.0, "k={k}, k3={k3}, g={g}");
                assert_eq!(g < 0.0, k3 < 0.0, "k={k}, k3={k3}, g={g}");
                // consistency with subtracting the parent series; those two
                // lose digits to alternating-sum cancellation at strongly
                // negative k3, so the bound is relative to the constant
                let sub = b.d_assoc - b.d_k1k2;
                assert!(
                    (g - sub).abs() <= 1e-9 * b.c + 1e-10 * g.abs(),
                    "difference series drifted from parents: k={k}, k3={k3}, {g:e} vs {sub:e}"
                );
            }
        }
    }

    #[test]
    fn moment_ratios_stay_in_range() {
        for (k1, k2, l) in [
            (0.5, 0.5, 0.2),
            (1.0, 1.0, 2.0),
            (10.0, 10.0, -20.0),
            (0.0, 4.0, 1.0),
        ] {
            let b = sine(k1, k2, l);
            assert!(b.c > 0.0);
            assert!((0.0..1.0).contains(&(b.d_k1 / b.c)), "{:?}", (k1, k2, l));
            assert!((0.0..1.0).contains(&(b.d_k2 / b.c)));
            assert!(b.d_k1k1 / b.c > 0.0 && b.d_k1k1 / b.c < 1.0);
            assert!(b.d_k2k2 / b.c > 0.0 && b.d_k2k2 / b.c < 1.0);
        }
    }

    #[test]
    fn non_convergence_reports_terms() {
        let control = SeriesControl {
            max_terms: 4,
            ..SeriesControl::default()
        };
        let err = sine_bundle(&ModelParams::sine(1.0, 1.0, 30.0).unwrap(), &control).unwrap_err();
        match err {
            Error::SeriesNonConvergence {
                terms_used,
                max_terms,
            } => {
                assert_eq!(max_terms, 4);
                assert_eq!(terms_used, 4);
            }
            other => panic!("expected non-convergence, got {other}"),
        }
    }

    #[test]
    fn extreme_association_stays_finite() {
        // forces the dynamic rescaling path
        let b = sine(0.1, 0.1, 400.0);
        assert!(b.converged);
        assert!(b.c.is_finite() && b.c > 0.0);
        assert!(b.ln_constant().is_finite());
        let b2 = sine(300.0, 300.0, 150.0);
        assert!(b2.c.is_finite() && b2.c > 0.0);
        assert!((b2.d_k1 / b2.c).is_finite());
    }

    #[test]
    fn large_concentration_scaled_fields_finite() {
        let b = cosine(500.0, 480.0, 120.0);
        assert!(b.c.is_finite() && b.c > 0.0);
        assert!(b.ln_constant() > 500.0);
        let ecos = b.d_k1 / b.c;
        assert!(ecos > 0.99 && ecos < 1.0, "e_cos = {ecos}");
    }

    #[test]
    fn extreme_alternating_cancellation_is_reported() {
        // at this scale the alternating sums cancel below f64 precision;
        // returning values would be returning noise
        let err = cosine_bundle(
            &ModelParams::cosine(500.0, 480.0, -120.0).unwrap(),
            &SeriesControl::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::PrecisionLoss { .. }), "got {err}");
    }
}
