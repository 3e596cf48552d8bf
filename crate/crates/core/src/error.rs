//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the analytic, sampling and validation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or control parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An unscaled Bessel value exceeds the f64 range.
    #[error("bessel overflow: I_{order}({x}) exceeds the f64 range")]
    BesselOverflow { order: u32, x: f64 },

    /// A normalizing-constant series hit its term cap before converging.
    #[error("series did not converge: used {terms_used} of {max_terms} terms")]
    SeriesNonConvergence { terms_used: usize, max_terms: usize },

    /// Alternating-series cancellation destroyed the working precision
    /// (very large concentrations combined with a strongly negative cosine
    /// association).
    #[error("catastrophic cancellation: series sum is {sum_to_term_ratio:.1e} of its term scale, below f64 working precision")]
    PrecisionLoss { sum_to_term_ratio: f64 },

    /// A correlation denominator vanished (limiting concentration inputs).
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    /// A sample statistic denominator vanished.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The circular mean is undefined (zero resultant).
    #[error("undefined circular mean: resultant length {resultant:.3e} below threshold")]
    UndefinedMean { resultant: f64 },

    /// The rejection envelope would make acceptance vanish.
    #[error("rejection envelope too tight: kappa1 + kappa2 + |assoc| = {0} exceeds {MAX_ENVELOPE_EXPONENT}")]
    EnvelopeTooTight(f64),

    /// Torus quadrature failed to converge at the resolution cap.
    #[error("torus quadrature did not converge at the {cap}-point-per-axis cap")]
    ResolutionCap { cap: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Exponent bound for the rejection sampler envelope `exp(k1 + k2 + |assoc|)`.
pub const MAX_ENVELOPE_EXPONENT: f64 = 12.0;

pub type Result<T> = std::result::Result<T, Error>;
