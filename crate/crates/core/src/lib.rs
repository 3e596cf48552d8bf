//! Circular correlation coefficients for the bivariate von Mises sine and
//! cosine models on the torus.
//!
//! The two models place a pair of angles `(theta, phi)` on `[-pi, pi)^2` with
//! densities proportional to
//!
//! ```text
//! sine:   exp(k1 cos(theta - mu1) + k2 cos(phi - mu2)
//!             + lambda sin(theta - mu1) sin(phi - mu2))
//! cosine: exp(k1 cos(theta - mu1) + k2 cos(phi - mu2)
//!             + k3 cos(theta - mu1 - phi + mu2))
//! ```
//!
//! This crate evaluates their normalizing constants and partial derivatives
//! as Bessel-function series, assembles the Jammalamadaka-Sarma and
//! Fisher-Lee circular correlation coefficients and the marginal circular
//! variances from them, draws random samples (Gibbs on the exact von Mises
//! full conditionals, plus an independent rejection sampler), and provides
//! the matching sample estimators together with a Monte Carlo replication
//! harness. A periodic-trapezoid quadrature oracle validates every series
//! and moment independently of the series code path.
//!
//! Modules:
//! - [`bessel`]: scaled modified Bessel functions `I_m` and ratio forms
//! - [`series`]: sine/cosine normalizing-constant series and derivatives
//! - [`moments`]: trigonometric moments, correlations, variances
//! - [`sampling`]: exact density, Gibbs and rejection samplers
//! - [`estimation`]: sample statistics and the Monte Carlo harness
//! - [`quadrature`]: independent torus-integration oracle

pub mod bessel;
pub mod error;
pub mod estimation;
pub mod model;
pub mod moments;
pub mod quadrature;
pub mod sampling;
pub mod series;

pub use error::{Error, Result};
pub use estimation::{
    circular_mean, mc_validate, sample_circular_variance, sample_rho_fl, sample_rho_js,
    McValidation, Quantity,
};
pub use model::{wrap_angle, Family, ModelParams, SeriesControl};
pub use moments::{
    circular_variance, correlation_report, normal_approx_rho, rho_fl, rho_js, round_sig,
    trig_moments, CorrelationReport, NormalApprox, TrigMoments,
};
pub use quadrature::{integrate_torus, oracle_constant, oracle_moments, GridSpec, OracleMoments};
pub use sampling::{
    cosine_conditional, log_density, sample_bivariate, sample_bivariate_rejection,
    sample_univariate_vm, sine_conditional, AngleSampleMatrix, ConditionalSpec, Density,
    RejectionSample, SampleMethod, SamplerConfig,
};
pub use series::{cosine_bundle, series_bundle, sine_bundle, SeriesBundle};
