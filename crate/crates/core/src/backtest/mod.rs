//! Rolling-window backtest, transaction costs, and reported metrics.

mod config;
mod engine;
mod ledger;
mod metrics;
pub mod pca;
mod report;
pub mod synthetic;

use chrono::NaiveDate;
use thiserror::Error;

pub use config::{BacktestConfig, DEFAULT_ALPHAS, MIN_WINDOW};
pub use engine::{derive_seed, out_of_sample_rows, run_backtest, simulate_date, BacktestRun, DateScenarios, ModelRecord, NigRecord, OUTPUT_FILES};
pub use ledger::{apply_costs, ewbh_benchmark, ledgers_from_csv, ledgers_to_csv, BacktestLedger, LedgerRow, INITIAL_VALUE};
pub use metrics::{
    annualized_return_pct, cvar_empirical, gini_mean_difference, lower_partial_deviation, max_drawdown,
    rr_ratios, EmpiricalCvar, RrRatios, MIN_RATIO_OBS,
};
pub use pca::{pca_explained_dynamics, PcaDynamics, PcaRow, PcaWindow};
pub use report::{metrics_csv_string, value_paths_csv_string, MetricsReport, RATIO_TAIL};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticMarket};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("invalid backtest configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {needed} price dates, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("{stage} failed on {date}: {source}")]
    Stage {
        date: NaiveDate,
        stage: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
