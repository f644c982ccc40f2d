use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::DataError;

/// Close prices (and optionally highs/lows) for a set of assets on a common
/// trading calendar. Rows are dates, columns are assets.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: DMatrix<f64>,
    highs: Option<DMatrix<f64>>,
    lows: Option<DMatrix<f64>>,
}

fn check_dates(dates: &[NaiveDate]) -> Result<(), DataError> {
    for w in dates.windows(2) {
        if w[1] <= w[0] {
            return Err(DataError::UnorderedDates(w[1]));
        }
    }
    Ok(())
}

impl PricePanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        prices: DMatrix<f64>,
    ) -> Result<Self, DataError> {
        if prices.nrows() != dates.len() || prices.ncols() != tickers.len() {
            return Err(DataError::MisalignedSeries(format!(
                "price matrix is {}x{}, expected {}x{}",
                prices.nrows(),
                prices.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        check_dates(&dates)?;
        for (col, column) in prices.column_iter().enumerate() {
            for (row, &value) in column.iter().enumerate() {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(DataError::NonPositivePrice { row, col, value });
                }
            }
        }
        Ok(Self { dates, tickers, prices, highs: None, lows: None })
    }

    /// Attaches high/low matrices of the same shape as the closes.
    pub fn with_ranges(mut self, highs: DMatrix<f64>, lows: DMatrix<f64>) -> Result<Self, DataError> {
        let shape = self.prices.shape();
        if highs.shape() != shape || lows.shape() != shape {
            return Err(DataError::MisalignedSeries("high/low shape differs from closes".into()));
        }
        self.highs = Some(highs);
        self.lows = Some(lows);
        Ok(self)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }
    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }
    pub fn highs(&self) -> Option<&DMatrix<f64>> {
        self.highs.as_ref()
    }
    pub fn lows(&self) -> Option<&DMatrix<f64>> {
        self.lows.as_ref()
    }
    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }
    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    /// Keeps only the rows whose date is in `keep` (which must be sorted).
    pub fn retain_dates(&self, keep: &[NaiveDate]) -> Self {
        let rows: Vec<usize> = self
            .dates
            .iter()
            .enumerate()
            .filter(|(_, d)| keep.binary_search(d).is_ok())
            .map(|(i, _)| i)
            .collect();
        let pick = |m: &DMatrix<f64>| m.select_rows(rows.iter());
        Self {
            dates: rows.iter().map(|&r| self.dates[r]).collect(),
            tickers: self.tickers.clone(),
            prices: pick(&self.prices),
            highs: self.highs.as_ref().map(pick),
            lows: self.lows.as_ref().map(pick),
        }
    }
}

/// Daily log returns; row `t` holds `ln(p[t+1] / p[t])` of the source prices
/// and is dated at the later of the two price dates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    returns: DMatrix<f64>,
}

impl ReturnPanel {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, returns: DMatrix<f64>) -> Result<Self, DataError> {
        if returns.nrows() != dates.len() || returns.ncols() != tickers.len() {
            return Err(DataError::MisalignedSeries(format!(
                "return matrix is {}x{}, expected {}x{}",
                returns.nrows(),
                returns.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        check_dates(&dates)?;
        Ok(Self { dates, tickers, returns })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }
    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }
    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }
    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }
    pub fn column(&self, asset: usize) -> Vec<f64> {
        self.returns.column(asset).iter().copied().collect()
    }
}

/// Computes `ln(p[t]) - ln(p[t-1])` for every asset.
pub fn compute_log_returns(prices: &PricePanel) -> Result<ReturnPanel, DataError> {
    let n = prices.n_dates();
    if n < 2 {
        return Err(DataError::InsufficientRows { needed: 2, got: n });
    }
    let p = prices.prices();
    let returns = DMatrix::from_fn(n - 1, prices.n_assets(), |t, i| p[(t + 1, i)].ln() - p[(t, i)].ln());
    ReturnPanel::new(prices.dates()[1..].to_vec(), prices.tickers().to_vec(), returns)
}

/// Factor observations for one asset: rows are dates, columns are factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanel {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    pub factor_names: Vec<String>,
    pub values: DMatrix<f64>,
    /// Per-factor `(min, max)` recorded by the last normalization.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl FactorPanel {
    pub fn new(
        ticker: impl Into<String>,
        dates: Vec<NaiveDate>,
        factor_names: Vec<String>,
        values: DMatrix<f64>,
    ) -> Result<Self, DataError> {
        if values.nrows() != dates.len() || values.ncols() != factor_names.len() {
            return Err(DataError::MisalignedSeries("factor matrix shape does not match dates/names".into()));
        }
        check_dates(&dates)?;
        Ok(Self { ticker: ticker.into(), dates, factor_names, values, bounds: None })
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    /// Returns the rows whose dates match `dates` exactly, in order.
    pub fn align_to(&self, dates: &[NaiveDate]) -> Result<Self, DataError> {
        let mut rows = Vec::with_capacity(dates.len());
        for d in dates {
            let r = self.dates.binary_search(d).map_err(|_| {
                DataError::MisalignedSeries(format!("factor data for {} has no row at {d}", self.ticker))
            })?;
            rows.push(r);
        }
        Ok(Self {
            ticker: self.ticker.clone(),
            dates: dates.to_vec(),
            factor_names: self.factor_names.clone(),
            values: self.values.select_rows(rows.iter()),
            bounds: None,
        })
    }
}

/// One [`FactorPanel`] per asset, in universe order, sharing factor names
/// and dates.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    panels: Vec<FactorPanel>,
}

impl FactorSet {
    pub fn new(panels: Vec<FactorPanel>) -> Result<Self, DataError> {
        if let Some(first) = panels.first() {
            for p in &panels[1..] {
                if p.factor_names != first.factor_names {
                    return Err(DataError::MisalignedSeries(format!(
                        "factor names of {} differ from {}",
                        p.ticker, first.ticker
                    )));
                }
                if p.dates != first.dates {
                    return Err(DataError::MisalignedSeries(format!(
                        "factor dates of {} differ from {}",
                        p.ticker, first.ticker
                    )));
                }
            }
        }
        Ok(Self { panels })
    }

    pub fn panels(&self) -> &[FactorPanel] {
        &self.panels
    }
    pub fn n_factors(&self) -> usize {
        self.panels.first().map_or(0, |p| p.n_factors())
    }
    pub fn dates(&self) -> &[NaiveDate] {
        self.panels.first().map_or(&[], |p| &p.dates)
    }

    pub fn align_to(&self, dates: &[NaiveDate]) -> Result<Self, DataError> {
        Self::new(self.panels.iter().map(|p| p.align_to(dates)).collect::<Result<_, _>>()?)
    }
}
