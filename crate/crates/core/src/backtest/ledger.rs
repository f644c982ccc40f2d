//! Portfolio accounting.
//!
//! A trade at the start of day `t` moves the book from `weights_before`
//! to `weights_after`; the day's simple return then accrues on the new
//! weights and the trading cost is charged on the pre-trade value:
//! `value[t] = value[t-1] (1 + gross[t]) - cost[t]`.

use chrono::NaiveDate;

use super::BacktestError;
use crate::data::ReturnPanel;

/// Starting value of every strategy.
pub const INITIAL_VALUE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub date: NaiveDate,
    pub weights_before: Vec<f64>,
    pub weights_after: Vec<f64>,
    pub gross_return: f64,
    pub cost: f64,
    pub net_return: f64,
    pub value: f64,
    /// `sum |after - before|`.
    pub turnover: f64,
}

/// Value path and trades of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestLedger {
    pub name: String,
    /// Risk-reward weight of an optimized strategy; `None` for benchmarks.
    pub alpha: Option<f64>,
    pub tickers: Vec<String>,
    pub rows: Vec<LedgerRow>,
}

impl BacktestLedger {
    pub fn new(name: impl Into<String>, alpha: Option<f64>, tickers: Vec<String>) -> Self {
        Self { name: name.into(), alpha, tickers, rows: Vec::new() }
    }

    pub fn last_value(&self) -> f64 {
        self.rows.last().map_or(INITIAL_VALUE, |r| r.value)
    }

    /// Weights held after the last trade; all zero (cash) before the first.
    pub fn current_weights(&self) -> Vec<f64> {
        self.rows.last().map_or_else(|| vec![0.0; self.tickers.len()], |r| r.weights_after.clone())
    }

    /// The value path including the initial value.
    pub fn values(&self) -> Vec<f64> {
        std::iter::once(INITIAL_VALUE).chain(self.rows.iter().map(|r| r.value)).collect()
    }

    pub fn net_returns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.net_return).collect()
    }

    /// Trades into `new_weights` on `date` and books the day's asset simple
    /// returns.
    pub fn record_trade(&mut self, date: NaiveDate, new_weights: Vec<f64>, simple_returns: &[f64], cost_rate: f64) {
        let before = self.current_weights();
        let value = self.last_value();
        let (cost, _) = apply_costs(&before, &new_weights, value, cost_rate);
        let gross: f64 = new_weights.iter().zip(simple_returns).map(|(w, r)| w * r).sum();
        let turnover = l1_distance(&before, &new_weights);
        let next = value * (1.0 + gross) - cost;
        self.rows.push(LedgerRow {
            date,
            weights_before: before,
            weights_after: new_weights,
            gross_return: gross,
            cost,
            net_return: next / value - 1.0,
            value: next,
            turnover,
        });
    }
}

pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Cost of rebalancing `value` from `prev` to `new` at `cost_rate` per unit
/// of traded weight, and the value left after paying it.
pub fn apply_costs(prev: &[f64], new: &[f64], value: f64, cost_rate: f64) -> (f64, f64) {
    let cost = value * cost_rate * l1_distance(prev, new);
    (cost, value - cost)
}

/// Equal-weight buy-and-hold over the log returns in `returns`: equal
/// weights bought on the first date, never rebalanced afterwards.
pub fn ewbh_benchmark(returns: &ReturnPanel, cost_rate: f64) -> BacktestLedger {
    let n = returns.n_assets();
    let mut ledger = BacktestLedger::new("ewbh", None, returns.tickers().to_vec());
    let mut weights = vec![1.0 / n as f64; n];
    for (t, date) in returns.dates().iter().enumerate() {
        let simple: Vec<f64> = (0..n).map(|i| returns.returns()[(t, i)].exp_m1()).collect();
        if t == 0 {
            ledger.record_trade(*date, weights.clone(), &simple, cost_rate);
        } else {
            let value = ledger.last_value();
            let gross: f64 = weights.iter().zip(&simple).map(|(w, r)| w * r).sum();
            ledger.rows.push(LedgerRow {
                date: *date,
                weights_before: weights.clone(),
                weights_after: weights.clone(),
                gross_return: gross,
                cost: 0.0,
                net_return: gross,
                value: value * (1.0 + gross),
                turnover: 0.0,
            });
        }
        let gross = ledger.rows[t].gross_return;
        for (w, r) in weights.iter_mut().zip(&simple) {
            *w *= (1.0 + r) / (1.0 + gross);
        }
    }
    ledger
}

const FIXED_COLUMNS: [&str; 8] = ["strategy", "alpha", "date", "gross_return", "cost", "net_return", "value", "turnover"];

/// Long-format CSV: one row per strategy and date, followed by the
/// `before_<ticker>` and `after_<ticker>` weight columns. All strategies
/// must share the ticker list.
pub fn ledgers_to_csv(ledgers: &[BacktestLedger]) -> String {
    let tickers = ledgers.first().map_or(&[][..], |l| &l.tickers[..]);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(tickers.iter().map(|t| format!("before_{t}")));
    header.extend(tickers.iter().map(|t| format!("after_{t}")));
    let mut out = header.join(",");
    out.push('\n');
    for l in ledgers {
        let alpha = l.alpha.map_or(String::new(), |a| a.to_string());
        for r in &l.rows {
            let mut cells = vec![
                l.name.clone(),
                alpha.clone(),
                r.date.to_string(),
                r.gross_return.to_string(),
                r.cost.to_string(),
                r.net_return.to_string(),
                r.value.to_string(),
                r.turnover.to_string(),
            ];
            cells.extend(r.weights_before.iter().chain(&r.weights_after).map(f64::to_string));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

/// Inverse of [`ledgers_to_csv`]; strategies keep their first-appearance
/// order.
pub fn ledgers_from_csv(text: &str) -> Result<Vec<BacktestLedger>, BacktestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let perr = |line: u64, msg: String| BacktestError::Parse { line: line as usize, msg };
    let header = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < FIXED_COLUMNS.len() || cols[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(perr(1, format!("expected leading columns {}", FIXED_COLUMNS.join(","))));
    }
    let n_weights = cols.len() - FIXED_COLUMNS.len();
    if n_weights % 2 != 0 {
        return Err(perr(1, "unpaired weight columns".into()));
    }
    let n = n_weights / 2;
    let tickers: Vec<String> = cols[FIXED_COLUMNS.len()..FIXED_COLUMNS.len() + n]
        .iter()
        .map(|c| c.strip_prefix("before_").map(str::to_string).ok_or_else(|| perr(1, format!("bad weight column {c:?}"))))
        .collect::<Result<_, _>>()?;

    let mut out: Vec<BacktestLedger> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |k: usize| -> Result<f64, BacktestError> {
            rec[k].parse::<f64>().map_err(|_| perr(line, format!("column {}: bad number {:?}", cols[k], &rec[k])))
        };
        let name = rec[0].to_string();
        let alpha = if rec[1].is_empty() { None } else { Some(num(1)?) };
        let date: NaiveDate = rec[2].parse().map_err(|_| perr(line, format!("bad date {:?}", &rec[2])))?;
        let w = |offset: usize| -> Result<Vec<f64>, BacktestError> { (0..n).map(|i| num(FIXED_COLUMNS.len() + offset + i)).collect() };
        let row = LedgerRow {
            date,
            gross_return: num(3)?,
            cost: num(4)?,
            net_return: num(5)?,
            value: num(6)?,
            turnover: num(7)?,
            weights_before: w(0)?,
            weights_after: w(n)?,
        };
        match out.iter_mut().find(|l| l.name == name) {
            Some(l) => l.rows.push(row),
            None => {
                let mut l = BacktestLedger::new(name, alpha, tickers.clone());
                l.rows.push(row);
                out.push(l);
            }
        }
    }
    Ok(out)
}
