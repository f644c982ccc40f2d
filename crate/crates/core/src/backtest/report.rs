//! Per-strategy performance tables.
//!
//! Return-like quantities are in percent; ratios are unitless. `None`
//! marks a metric that is undefined for the sample (empty CSV cell).

use serde::Serialize;

use super::{annualized_return_pct, cvar_empirical, lower_partial_deviation, max_drawdown, rr_ratios, BacktestLedger};
use crate::numeric::stats;

/// Tail level of the Rachev and STARR ratios.
pub const RATIO_TAIL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub strategy: String,
    pub days: usize,
    pub total_return_pct: f64,
    pub annualized_return_pct: f64,
    /// Mean turnover after the inception trade.
    pub avg_turnover_pct: Option<f64>,
    pub cvar_lower_95_pct: Option<f64>,
    pub cvar_upper_95_pct: Option<f64>,
    pub cvar_lower_99_pct: Option<f64>,
    pub cvar_upper_99_pct: Option<f64>,
    pub max_drawdown_pct: f64,
    pub mean_pct: f64,
    pub median_pct: f64,
    pub std_pct: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    /// Root mean square shortfall below the mean.
    pub semi_deviation_pct: f64,
    pub ir: Option<f64>,
    pub sortino: Option<f64>,
    pub starr: Option<f64>,
    pub rachev: Option<f64>,
    pub gini: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl MetricsReport {
    pub fn from_ledger(ledger: &BacktestLedger) -> Self {
        let r = ledger.net_returns();
        let values = ledger.values();
        let days = r.len();
        let final_value = *values.last().expect("values start with the initial value");
        let tails = |beta: f64| {
            let c = cvar_empirical(&r, beta);
            if c.tail_empty || r.is_empty() {
                (None, None)
            } else {
                (Some(100.0 * c.lower), Some(100.0 * c.upper))
            }
        };
        let (l95, u95) = tails(0.95);
        let (l99, u99) = tails(0.99);
        let later: Vec<f64> = ledger.rows.iter().skip(1).map(|row| row.turnover).collect();
        let std = stats::std_dev(&r);
        let shape = |x: f64| if std > 0.0 { finite(x) } else { None };
        let ratios = rr_ratios(&r, RATIO_TAIL);
        let mean = if r.is_empty() { 0.0 } else { stats::mean(&r) };
        Self {
            strategy: ledger.name.clone(),
            days,
            total_return_pct: 100.0 * (final_value / values[0] - 1.0),
            annualized_return_pct: if days > 0 { annualized_return_pct(values[0], final_value, days) } else { 0.0 },
            avg_turnover_pct: (!later.is_empty()).then(|| 100.0 * stats::mean(&later)),
            cvar_lower_95_pct: l95,
            cvar_upper_95_pct: u95,
            cvar_lower_99_pct: l99,
            cvar_upper_99_pct: u99,
            max_drawdown_pct: max_drawdown(&values),
            mean_pct: 100.0 * mean,
            median_pct: if r.is_empty() { 0.0 } else { 100.0 * stats::median(&r) },
            std_pct: 100.0 * std,
            skewness: shape(stats::skewness(&r)),
            excess_kurtosis: shape(stats::excess_kurtosis(&r)),
            semi_deviation_pct: 100.0 * lower_partial_deviation(&r, mean),
            ir: ratios.ir,
            sortino: ratios.sortino,
            starr: ratios.starr,
            rachev: ratios.rachev,
            gini: ratios.gini,
        }
    }
}

pub fn metrics_csv_string(reports: &[MetricsReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(r).expect("metrics rows are always serializable");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

/// Wide value-path table: `date` then one column per strategy. Strategies
/// must cover the same dates.
pub fn value_paths_csv_string(ledgers: &[BacktestLedger]) -> String {
    let mut out = String::from("date");
    for l in ledgers {
        out.push(',');
        out.push_str(&l.name);
    }
    out.push('\n');
    let n = ledgers.iter().map(|l| l.rows.len()).min().unwrap_or(0);
    for t in 0..n {
        out.push_str(&ledgers[0].rows[t].date.to_string());
        for l in ledgers {
            out.push(',');
            out.push_str(&l.rows[t].value.to_string());
        }
        out.push('\n');
    }
    out
}
