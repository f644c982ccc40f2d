use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{FactorError, FactorModelKind};

/// Goodness-of-fit summary with `edf` effective parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub adj_r2: f64,
    pub mae: f64,
    /// Gaussian BIC `n ln(RSS / n) + edf ln n`.
    pub bic: f64,
}

impl Diagnostics {
    pub fn compute(h: &[f64], residuals: &[f64], edf: f64) -> Self {
        let n = h.len() as f64;
        let mean = crate::numeric::stats::mean(h);
        let tss: f64 = h.iter().map(|v| (v - mean).powi(2)).sum();
        let rss: f64 = residuals.iter().map(|r| r * r).sum();
        let adj_r2 = if rss == 0.0 {
            1.0
        } else if tss > 0.0 && n - edf > 0.0 {
            1.0 - (rss / (n - edf)) / (tss / (n - 1.0))
        } else {
            f64::NAN
        };
        let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / n;
        let bic = n * (rss / n).ln() + edf * n.ln();
        Self { adj_r2, mae, bic }
    }
}

/// One row of the per-window diagnostics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub date: NaiveDate,
    pub ticker: String,
    pub model: FactorModelKind,
    pub adj_r2: f64,
    pub mae: f64,
    pub bic: f64,
    pub pvalue_flags: String,
}

/// CSV text with header `date,ticker,model,adj_r2,mae,bic,pvalue_flags`.
pub fn diagnostics_csv_string(records: &[DiagnosticRecord]) -> Result<String, FactorError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record(["date", "ticker", "model", "adj_r2", "mae", "bic", "pvalue_flags"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| FactorError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticRecord]) -> Result<(), FactorError> {
    let text = diagnostics_csv_string(records)?;
    crate::data::io::write_atomic(path, text.as_bytes())?;
    Ok(())
}
