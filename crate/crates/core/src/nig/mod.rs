//! Multivariate normal inverse Gaussian law: Bessel functions, density in
//! the classical parametrization, mixture sampling, and EM estimation in
//! the mean-one mixing parametrization.

mod bessel;
mod em;
mod params;
mod sample;

pub use bessel::{bessel_k, bessel_k_ratio, log_bessel_k};
pub use em::{fit_nig_em, gig_moments, EmOptions, EmTrace, GigMoments};
pub use params::{nig_log_density, NigClassic, NigEvaluator, NigParams, NigRecord, NIG_LAMBDA};
pub use sample::{sample_gig, sample_nig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NigError {
    #[error("Bessel argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("dispersion matrix is not symmetric positive definite")]
    SingularDispersion,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rank-deficient data: {0}")]
    RankDeficientData(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parameter record: {0}")]
    Record(String),
}
