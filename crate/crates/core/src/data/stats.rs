use serde::Serialize;

use super::{DataError, ReturnPanel};
use crate::backtest::cvar_empirical;
use crate::numeric::stats;

/// Per-asset summary of a return panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetStats {
    pub ticker: String,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub cvar_lower: f64,
    pub cvar_upper: f64,
}

pub fn panel_stats(returns: &ReturnPanel, beta: f64) -> Result<Vec<AssetStats>, DataError> {
    if returns.n_dates() < 2 {
        return Err(DataError::InsufficientRows { needed: 2, got: returns.n_dates() });
    }
    Ok((0..returns.n_assets())
        .map(|i| {
            let x = returns.column(i);
            let tails = cvar_empirical(&x, beta);
            AssetStats {
                ticker: returns.tickers()[i].clone(),
                mean: stats::mean(&x),
                median: stats::median(&x),
                std: stats::std_dev(&x),
                skewness: stats::skewness(&x),
                excess_kurtosis: stats::excess_kurtosis(&x),
                cvar_lower: tails.lower,
                cvar_upper: tails.upper,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use nalgebra::DMatrix;

    fn panel(cols: &[&[f64]]) -> ReturnPanel {
        let rows = cols[0].len();
        let dates = (0..rows)
            .map(|i| NaiveDate::from_ymd_opt(2019, 1, 1).unwrap() + chrono::Days::new(i as u64))
            .collect();
        let m = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]);
        ReturnPanel::new(dates, (0..cols.len()).map(|i| format!("A{i}")).collect(), m).unwrap()
    }

    #[test]
    fn constant_series() {
        let st = panel_stats(&panel(&[&[0.01; 200]]), 0.99).unwrap();
        assert_eq!(st[0].mean, 0.01);
        assert_eq!(st[0].median, 0.01);
        assert!(st[0].std.abs() < 1e-15);
        assert!((st[0].cvar_lower - 0.01).abs() < 1e-15);
        assert!((st[0].cvar_upper - 0.01).abs() < 1e-15);
    }

    #[test]
    fn symmetric_two_point() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -0.02 } else { 0.02 }).collect();
        let st = panel_stats(&panel(&[&x]), 0.95).unwrap();
        assert!(st[0].skewness.abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(panel_stats(&panel(&[&[0.1]]), 0.99).is_err());
    }
}
