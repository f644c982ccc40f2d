//! Factor-augmented ARMA-GARCH scenario generation with a multivariate NIG
//! residual model, mean-CVaR portfolio optimization, and a rolling
//! out-of-sample backtest.

pub mod backtest;
pub mod cvaropt;
pub mod data;
pub mod factors;
pub mod nig;
pub mod numeric;
pub mod timeseries;

pub use backtest::{run_backtest, BacktestConfig, BacktestError, BacktestLedger, BacktestRun, MetricsReport};
pub use cvaropt::{optimize_portfolio, OptConfig, OptError, OptResult, ScenarioMatrix};
pub use data::{DataError, FactorPanel, FactorSet, PricePanel, ReturnPanel};
pub use factors::{FactorError, FactorModelKind};
pub use nig::{NigError, NigParams};
pub use timeseries::{ArmaGarchFit, ArmaGarchSpec, TimeseriesError};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Nig(#[from] NigError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Backtest(#[from] BacktestError),
}
