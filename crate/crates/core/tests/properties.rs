//! Property tests over randomized parameters and data.

use proptest::prelude::*;
use std::f64::consts::PI;

use bvmcorr::{
    correlation_report, sample_bivariate, sample_circular_variance, sample_rho_fl, sample_rho_js,
    trig_moments, wrap_angle, Family, ModelParams, SamplerConfig, SeriesControl,
};

fn any_family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Sine), Just(Family::Cosine)]
}

fn modest_params() -> impl Strategy<Value = ModelParams> {
    (
        any_family(),
        0.0..10.0f64,
        0.0..10.0f64,
        -20.0..20.0f64,
        -PI..PI,
        -PI..PI,
    )
        .prop_map(|(family, k1, k2, assoc, mu1, mu2)| {
            ModelParams::new(family, mu1, mu2, k1, k2, assoc).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn report_invariants_hold(params in modest_params()) {
        let r = correlation_report(&params, &SeriesControl::default()).unwrap();
        prop_assert!(r.rho_js.abs() <= 1.0 + 1e-12);
        prop_assert!(r.rho_fl.abs() <= 1.0 + 1e-12);
        // E cos(. - mu) is a series of non-negative terms for the sine
        // family and for cosine with non-negative association, so the
        // variances sit in [0, 1] there. Strongly asymmetric cosine
        // parameters with large negative association push the marginal
        // mass toward the antipode of mu, where E cos goes negative and
        // 1 - E cos legitimately exceeds 1 (bounded by 2).
        let var_cap = if params.family == Family::Cosine && params.assoc < 0.0 {
            2.0
        } else {
            1.0
        };
        prop_assert!((0.0..=var_cap + 1e-12).contains(&r.var_theta));
        prop_assert!((0.0..=var_cap + 1e-12).contains(&r.var_phi));
        // ordering and exact product identity
        prop_assert!(r.rho_fl.abs() <= r.rho_js.abs() + 1e-12);
        prop_assert!((r.rho_fl - r.delta * r.rho_js).abs() <= 1e-12);
        // sign law
        prop_assert_eq!(r.rho_js > 0.0, params.assoc > 0.0);
        prop_assert_eq!(r.rho_js < 0.0, params.assoc < 0.0);
    }

    #[test]
    fn moments_satisfy_schwarz(params in modest_params()) {
        let m = trig_moments(&params, &SeriesControl::default()).unwrap();
        prop_assert!(m.e_cos2_t > 0.0 && m.e_cos2_t <= 1.0);
        prop_assert!(m.e_cos2_p > 0.0 && m.e_cos2_p <= 1.0);
        prop_assert!(m.e_ss.abs() <= 1.0 && m.e_cc.abs() <= 1.0);
        let bound = (1.0 - m.e_cos2_t) * (1.0 - m.e_cos2_p);
        prop_assert!(m.e_ss * m.e_ss <= bound * (1.0 + 1e-10) + 1e-15);
    }

    #[test]
    fn sine_family_lambda_flip(k1 in 0.0..10.0f64, k2 in 0.0..10.0f64, l in 0.0..20.0f64) {
        let ctl = SeriesControl::default();
        let plus = correlation_report(&ModelParams::sine(k1, k2, l).unwrap(), &ctl).unwrap();
        let minus = correlation_report(&ModelParams::sine(k1, k2, -l).unwrap(), &ctl).unwrap();
        prop_assert_eq!(plus.rho_js, -minus.rho_js);
        prop_assert_eq!(plus.rho_fl, -minus.rho_fl);
        prop_assert_eq!(plus.var_theta, minus.var_theta);
        // sine-model signs always agree
        prop_assert!(plus.rho_js * plus.rho_fl >= 0.0);
    }

    #[test]
    fn estimators_are_rotation_invariant_and_bounded(
        seed in 0u64..1000,
        shift in -PI..PI,
        n in 8usize..200,
    ) {
        let params = ModelParams::sine(1.0, 1.0, 1.0).unwrap();
        let s = sample_bivariate(&params, n, &SamplerConfig::gibbs(seed)).unwrap();
        let js = sample_rho_js(&s.theta, &s.phi).unwrap();
        let fl = sample_rho_fl(&s.theta, &s.phi).unwrap();
        prop_assert!(js.abs() <= 1.0 && fl.abs() <= 1.0);
        let t2: Vec<f64> = s.theta.iter().map(|t| wrap_angle(t + shift)).collect();
        let p2: Vec<f64> = s.phi.iter().map(|p| wrap_angle(p + shift)).collect();
        prop_assert!((sample_rho_js(&t2, &p2).unwrap() - js).abs() <= 1e-10);
        prop_assert!((sample_rho_fl(&t2, &p2).unwrap() - fl).abs() <= 1e-10);
        let v = sample_circular_variance(&s.theta);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn samples_always_wrapped(params in modest_params(), seed in 0u64..500) {
        let s = sample_bivariate(&params, 64, &SamplerConfig::gibbs(seed)).unwrap();
        prop_assert!(s.theta.iter().chain(&s.phi).all(|x| (-PI..PI).contains(x)));
    }

    #[test]
    fn wrap_angle_is_idempotent_and_in_range(x in -1e6..1e6f64) {
        let w = wrap_angle(x);
        prop_assert!((-PI..PI).contains(&w));
        prop_assert_eq!(wrap_angle(w), w);
    }
}
