//! Per-asset ARMA(p,q)-GARCH(P,Q) filters with orders up to two, fitted by
//! Gaussian quasi-maximum likelihood and selected by BIC.
//!
//! Mean:     r_t = c1 + sum_j ar_j r_{t-j} + eps_t + sum_j ma_j eps_{t-j}
//! Variance: s2_t = c2 + sum_j garch_j s2_{t-j} + sum_j arch_j eps_{t-j}^2
//!
//! Pre-sample residuals are zero, pre-sample variances equal the sample
//! variance of the window and pre-sample returns equal its mean.

mod filter;
mod fit;
mod record;
mod select;
mod simulate;
mod spec;

pub use filter::{forecast_one_step, forecast_many, reconstruct_returns};
pub use fit::{bic, fit_arma_garch, ArmaGarchFit, FitOptions};
pub use record::{records_from_toml, records_to_toml, FitRecord};
pub use select::{select_model_bic, SelectionOptions};
pub use simulate::{simulate_arma_garch, ArmaGarchParams};
pub use spec::{ArmaGarchSpec, MAX_ORDER};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("series is constant")]
    ConstantSeries,
    #[error("optimizer diverged for spec {0}")]
    OptimizerDiverged(ArmaGarchSpec),
    #[error("every candidate specification failed to fit")]
    AllFitsFailed,
    #[error("fit carries no in-sample state to forecast from")]
    MissingState,
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("fit record: {0}")]
    Record(String),
}
