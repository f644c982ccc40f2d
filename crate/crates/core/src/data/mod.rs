//! Market and factor data: ingestion, derived indicators, per-window
//! normalization and rolling-window slicing.

mod indicators;
pub mod io;
mod normalize;
mod panel;
mod stats;
mod window;

pub use indicators::{compute_atr, compute_rsi};
pub use normalize::{normalize_factors, normalize_with_bounds};
pub(crate) use normalize::normalize_matrix;
pub use panel::{compute_log_returns, FactorPanel, FactorSet, PricePanel, ReturnPanel};
pub use stats::{panel_stats, AssetStats};
pub use window::{make_window, RollingWindow};

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("non-positive price {value} at row {row}, column {col}")]
    NonPositivePrice { row: usize, col: usize, value: f64 },
    #[error("insufficient rows: need at least {needed}, got {got}")]
    InsufficientRows { needed: usize, got: usize },
    #[error("window of {window} days is too long for a series of {len} observations")]
    WindowTooLong { window: usize, len: usize },
    #[error("misaligned series: {0}")]
    MisalignedSeries(String),
    #[error("window anchored at row {anchor} with length {length} is out of range (rows available: {rows})")]
    WindowOutOfRange { anchor: usize, length: usize, rows: usize },
    #[error("dates are not strictly increasing at {0}")]
    UnorderedDates(NaiveDate),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
