//! Trigonometric moments and the analytic circular correlation and
//! variance formulas, assembled from one series-bundle evaluation.
//!
//! The Jammalamadaka-Sarma coefficient is the product-moment analogue
//! `E[sin sin] / sqrt(E sin^2 E sin^2)`; the Fisher-Lee coefficient is the
//! U-statistic analogue over independent copies, which reduces to
//! `E[ss] E[cc] / sqrt(E cos^2 (1 - E cos^2) ...)` because the cross terms
//! `E[sin cos]` vanish by marginal symmetry. Because every quantity comes
//! from a single bundle, the identity `rho_fl = delta * rho_js` holds to
//! floating-point accuracy by construction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Family, ModelParams, SeriesControl};
use crate::series::{series_bundle, SeriesBundle};

/// Denominators smaller than this raise a degenerate-distribution error
/// instead of returning infinities.
const DEGENERATE_EPS: f64 = 1e-14;

/// The six expectations, taken relative to the mean directions, that feed
/// every correlation and variance formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrigMoments {
    /// `E cos(Theta - mu1)`
    pub e_cos_t: f64,
    /// `E cos(Phi - mu2)`
    pub e_cos_p: f64,
    /// `E cos^2(Theta - mu1)`
    pub e_cos2_t: f64,
    /// `E cos^2(Phi - mu2)`
    pub e_cos2_p: f64,
    /// `E [sin(Theta - mu1) sin(Phi - mu2)]`
    pub e_ss: f64,
    /// `E [cos(Theta - mu1) cos(Phi - mu2)]`
    pub e_cc: f64,
}

impl TrigMoments {
    /// Read the moments off a series bundle. The common scale exponent
    /// cancels in every ratio.
    pub fn from_bundle(bundle: &SeriesBundle) -> Self {
        let c = bundle.c;
        let e_ss = match bundle.family {
            Family::Sine => bundle.d_assoc / c,
            Family::Cosine => bundle.d_assoc_minus_d_k1k2 / c,
        };
        TrigMoments {
            e_cos_t: bundle.d_k1 / c,
            e_cos_p: bundle.d_k2 / c,
            e_cos2_t: bundle.d_k1k1 / c,
            e_cos2_p: bundle.d_k2k2 / c,
            e_ss,
            e_cc: bundle.d_k1k2 / c,
        }
    }
}

/// Normal-approximation reference value (`lambda/sqrt(k1 k2)` for sine,
/// `k3/sqrt((k1+k3)(k2+k3))` for cosine) with a flag recording whether the
/// hypotheses behind the approximation hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalApprox {
    pub value: f64,
    pub valid: bool,
}

/// Analytic correlations, circular variances and the moment ratio, plus
/// series convergence metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub rho_js: f64,
    pub rho_fl: f64,
    pub var_theta: f64,
    pub var_phi: f64,
    /// `delta = E[cc] / sqrt(E cos^2 E cos^2)`; `rho_fl = delta * rho_js`.
    pub delta: f64,
    pub normal_approx: Option<NormalApprox>,
    pub terms_used: usize,
    pub converged: bool,
}

impl CorrelationReport {
    /// Documented key-value text form, one `name = value` pair per line,
    /// 17 significant digits.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: f64| {
            out.push_str(&format!("{k} = {v:.16e}\n"));
        };
        push("rho_js", self.rho_js);
        push("rho_fl", self.rho_fl);
        push("var_theta", self.var_theta);
        push("var_phi", self.var_phi);
        push("delta", self.delta);
        match self.normal_approx {
            Some(na) => {
                push("normal_approx", na.value);
                out.push_str(&format!("normal_approx_valid = {}\n", na.valid));
            }
            None => out.push_str("normal_approx = none\n"),
        }
        out.push_str(&format!("terms_used = {}\n", self.terms_used));
        out.push_str(&format!("converged = {}\n", self.converged));
        out
    }
}

/// Trigonometric moments of the model; invariant under the choice of mean
/// directions.
pub fn trig_moments(params: &ModelParams, control: &SeriesControl) -> Result<TrigMoments> {
    Ok(TrigMoments::from_bundle(&series_bundle(params, control)?))
}

fn checked_sqrt_product(factors: &[(&str, f64)]) -> Result<f64> {
    let mut prod = 1.0;
    for &(name, v) in factors {
        if v <= DEGENERATE_EPS {
            return Err(Error::DegenerateDistribution(format!(
                "{name} = {v:.3e} is at or below the degeneracy threshold"
            )));
        }
        prod *= v;
    }
    Ok(prod.sqrt())
}

fn rho_js_from(m: &TrigMoments) -> Result<f64> {
    let den = checked_sqrt_product(&[
        ("E sin^2(Theta)", 1.0 - m.e_cos2_t),
        ("E sin^2(Phi)", 1.0 - m.e_cos2_p),
    ])?;
    Ok(m.e_ss / den)
}

fn rho_fl_from(m: &TrigMoments) -> Result<f64> {
    let den = checked_sqrt_product(&[
        ("E cos^2(Theta)", m.e_cos2_t),
        ("E sin^2(Theta)", 1.0 - m.e_cos2_t),
        ("E cos^2(Phi)", m.e_cos2_p),
        ("E sin^2(Phi)", 1.0 - m.e_cos2_p),
    ])?;
    Ok(m.e_ss * m.e_cc / den)
}

fn delta_from(m: &TrigMoments) -> Result<f64> {
    let den =
        checked_sqrt_product(&[("E cos^2(Theta)", m.e_cos2_t), ("E cos^2(Phi)", m.e_cos2_p)])?;
    Ok(m.e_cc / den)
}

/// Jammalamadaka-Sarma circular correlation coefficient.
pub fn rho_js(params: &ModelParams, control: &SeriesControl) -> Result<f64> {
    rho_js_from(&trig_moments(params, control)?)
}

/// Fisher-Lee circular correlation coefficient.
pub fn rho_fl(params: &ModelParams, control: &SeriesControl) -> Result<f64> {
    rho_fl_from(&trig_moments(params, control)?)
}

/// Marginal circular variances `(var Theta, var Phi) = (1 - E cos, 1 - E cos)`.
pub fn circular_variance(params: &ModelParams, control: &SeriesControl) -> Result<(f64, f64)> {
    let m = trig_moments(params, control)?;
    Ok((1.0 - m.e_cos_t, 1.0 - m.e_cos_p))
}

/// Closed-form normal-approximation value for the correlations, when the
/// defining expression exists; `valid` records whether the approximation's
/// hypotheses hold (sine: `lambda^2 < k1 k2`; cosine:
/// `k3 >= -k1 k2/(k1 + k2)`). Absence encodes inapplicability.
pub fn normal_approx_rho(params: &ModelParams) -> Option<NormalApprox> {
    match params.family {
        Family::Sine => {
            let prod = params.kappa1 * params.kappa2;
            if prod > 0.0 {
                Some(NormalApprox {
                    value: params.assoc / prod.sqrt(),
                    valid: params.assoc * params.assoc < prod,
                })
            } else {
                None
            }
        }
        Family::Cosine => {
            let f1 = params.kappa1 + params.assoc;
            let f2 = params.kappa2 + params.assoc;
            let ksum = params.kappa1 + params.kappa2;
            if f1 > 0.0 && f2 > 0.0 {
                Some(NormalApprox {
                    value: params.assoc / (f1 * f2).sqrt(),
                    valid: ksum > 0.0 && params.assoc >= -params.kappa1 * params.kappa2 / ksum,
                })
            } else {
                None
            }
        }
    }
}

fn report_from_moments(
    m: &TrigMoments,
    params: &ModelParams,
    terms_used: usize,
    converged: bool,
) -> Result<CorrelationReport> {
    Ok(CorrelationReport {
        rho_js: rho_js_from(m)?,
        rho_fl: rho_fl_from(m)?,
        var_theta: 1.0 - m.e_cos_t,
        var_phi: 1.0 - m.e_cos_p,
        delta: delta_from(m)?,
        normal_approx: normal_approx_rho(params),
        terms_used,
        converged,
    })
}

/// Full analytic report from a single series evaluation.
pub fn correlation_report(
    params: &ModelParams,
    control: &SeriesControl,
) -> Result<CorrelationReport> {
    let bundle = series_bundle(params, control)?;
    let m = TrigMoments::from_bundle(&bundle);
    report_from_moments(&m, params, bundle.terms_used, bundle.converged)
}

/// Round to `sig` significant decimal figures (presentation helper used by
/// the pretty table printer and the table-reproduction checks).
pub fn round_sig(x: f64, sig: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = sig as i32 - 1 - x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits);
    (x * factor).round() / factor
}
