//! CSV and manifest formats.
//!
//! * Price CSV: header `date,<ticker1>,<ticker2>,...`, ISO-8601 dates, one
//!   row per trading day. Empty, `NA`, `NaN` or `null` cells mark missing
//!   data; such rows are dropped.
//! * Factor CSV (one per asset): header `date,<factor1>,...,<factorK>`.
//! * Universe manifest (TOML):
//!
//! ```toml
//! tickers = ["AAA", "BBB"]
//!
//! [[factor]]
//! name = "rsi_14"
//! category = "momentum"   # momentum | fundamental | technical
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{DataError, FactorPanel, FactorSet, PricePanel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorCategory {
    Momentum,
    Fundamental,
    Technical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub name: String,
    pub category: FactorCategory,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UniverseManifest {
    pub tickers: Vec<String>,
    #[serde(default, rename = "factor")]
    pub factors: Vec<FactorSpec>,
}

impl UniverseManifest {
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path)?;
        let m: Self = toml::from_str(&text).map_err(|e| DataError::Manifest(format!("{}: {e}", path.display())))?;
        if m.tickers.is_empty() {
            return Err(DataError::Manifest(format!("{}: empty ticker list", path.display())));
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always serializable")
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan") || c.eq_ignore_ascii_case("null")
}

/// A dated numeric table as read from disk, missing rows already dropped.
#[derive(Debug, Clone)]
pub struct DatedTable {
    pub columns: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub values: DMatrix<f64>,
    pub dropped_rows: usize,
}

pub fn read_dated_csv(path: &Path) -> Result<DatedTable, DataError> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(DataError::Parse { path: name, line: 1, msg: "header must be `date,<col1>,...`".into() });
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut data = Vec::new();
    let mut dropped = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(DataError::Parse { path: name, line, msg: format!("expected {} fields, got {}", header.len(), rec.len()) });
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| DataError::Parse { path: name.clone(), line, msg: format!("bad date `{}`: {e}", &rec[0]) })?;
        if rec.iter().skip(1).any(is_missing) {
            dropped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(columns.len());
        for cell in rec.iter().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| DataError::Parse { path: name.clone(), line, msg: format!("bad number `{cell}`") })?;
            row.push(v);
        }
        dates.push(date);
        data.extend(row);
    }
    let values = DMatrix::from_row_slice(dates.len(), columns.len(), &data);
    if dropped > 0 {
        log::info!("{name}: dropped {dropped} rows with missing cells");
    }
    Ok(DatedTable { columns, dates, values, dropped_rows: dropped })
}

pub fn read_price_csv(path: &Path) -> Result<PricePanel, DataError> {
    let t = read_dated_csv(path)?;
    PricePanel::new(t.dates, t.columns, t.values)
}

pub fn read_factor_csv(path: &Path, ticker: &str) -> Result<FactorPanel, DataError> {
    let t = read_dated_csv(path)?;
    FactorPanel::new(ticker, t.dates, t.columns, t.values)
}

/// Renders a dated table as CSV text.
pub fn dated_csv_string(columns: &[String], dates: &[NaiveDate], values: &DMatrix<f64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["date".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (r, d) in dates.iter().enumerate() {
        let mut rec = vec![d.format("%Y-%m-%d").to_string()];
        rec.extend((0..values.ncols()).map(|c| format!("{}", values[(r, c)])));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn write_price_csv(path: &Path, panel: &PricePanel) -> Result<(), DataError> {
    write_atomic(path, dated_csv_string(panel.tickers(), panel.dates(), panel.prices()).as_bytes())?;
    Ok(())
}

pub fn write_factor_csv(path: &Path, panel: &FactorPanel) -> Result<(), DataError> {
    write_atomic(path, dated_csv_string(&panel.factor_names, &panel.dates, &panel.values).as_bytes())?;
    Ok(())
}

/// Writes through a temporary sibling file and renames it into place, so a
/// reader never observes a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let file_name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Prices plus per-asset factors restricted to the dates where every input
/// is complete.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub prices: PricePanel,
    /// Aligned with the log-return dates (price dates minus the first).
    pub factors: Option<FactorSet>,
}

/// Loads the price CSV and, when a factor directory is given, one
/// `<ticker>.csv` per manifest ticker. Dates missing from any input are
/// dropped everywhere.
pub fn load_dataset(
    prices_path: &Path,
    factor_dir: Option<&Path>,
    manifest: Option<&UniverseManifest>,
) -> Result<Dataset, DataError> {
    let mut prices = read_price_csv(prices_path)?;
    if let Some(m) = manifest {
        let cols: Vec<usize> = m
            .tickers
            .iter()
            .map(|t| {
                prices
                    .tickers()
                    .iter()
                    .position(|p| p == t)
                    .ok_or_else(|| DataError::Manifest(format!("ticker {t} missing from price file")))
            })
            .collect::<Result<_, _>>()?;
        prices = PricePanel::new(
            prices.dates().to_vec(),
            m.tickers.clone(),
            prices.prices().select_columns(cols.iter()),
        )?;
    }
    let Some(dir) = factor_dir else {
        return Ok(Dataset { prices, factors: None });
    };

    let mut panels = Vec::with_capacity(prices.n_assets());
    for t in prices.tickers() {
        let p = read_factor_csv(&dir.join(format!("{t}.csv")), t)?;
        if let Some(m) = manifest {
            if !m.factors.is_empty() && p.factor_names != m.factor_names() {
                return Err(DataError::Manifest(format!(
                    "factor columns of {t} ({:?}) do not match the manifest ({:?})",
                    p.factor_names,
                    m.factor_names()
                )));
            }
        }
        panels.push(p);
    }

    // Return row t is dated at price row t+1; its factor row must exist too.
    let mut keep: Vec<NaiveDate> = prices.dates().to_vec();
    let first = keep[0];
    for p in &panels {
        keep.retain(|d| *d == first || p.dates.binary_search(d).is_ok());
    }
    let prices = prices.retain_dates(&keep);
    let ret_dates = &prices.dates()[1..];
    let factors = FactorSet::new(
        panels
            .iter()
            .map(|p| p.align_to(ret_dates))
            .collect::<Result<_, _>>()?,
    )?;
    Ok(Dataset { prices, factors: Some(factors) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_rows_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "date,A,B\n2020-01-01,1,2\n2020-01-02,,2\n2020-01-03,1.5,NA\n2020-01-06,2,3\n").unwrap();
        let p = read_price_csv(&path).unwrap();
        assert_eq!(p.n_dates(), 2);
        assert_eq!(p.prices()[(1, 1)], 3.0);
    }

    #[test]
    fn parse_errors_carry_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "date,A\n2020-01-01,1\n2020-01-02,abc\n").unwrap();
        match read_price_csv(&path) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dataset_alignment_drops_incomplete_factor_dates() {
        let dir = tempfile::tempdir().unwrap();
        let pp = dir.path().join("p.csv");
        fs::write(&pp, "date,A\n2020-01-01,1\n2020-01-02,2\n2020-01-03,3\n2020-01-06,4\n").unwrap();
        let fdir = dir.path().join("f");
        fs::create_dir(&fdir).unwrap();
        fs::write(fdir.join("A.csv"), "date,x\n2020-01-01,0\n2020-01-02,1\n2020-01-03,\n2020-01-06,3\n").unwrap();
        let m = UniverseManifest {
            tickers: vec!["A".into()],
            factors: vec![FactorSpec { name: "x".into(), category: FactorCategory::Technical }],
        };
        let ds = load_dataset(&pp, Some(&fdir), Some(&m)).unwrap();
        assert_eq!(ds.prices.n_dates(), 3);
        let f = ds.factors.unwrap();
        assert_eq!(f.panels()[0].values.as_slice(), &[1.0, 3.0]);
    }

    #[test]
    fn manifest_round_trip() {
        let m = UniverseManifest {
            tickers: vec!["A".into(), "B".into()],
            factors: vec![FactorSpec { name: "rsi_14".into(), category: FactorCategory::Momentum }],
        };
        let back: UniverseManifest = toml::from_str(&m.to_toml()).unwrap();
        assert_eq!(back, m);
    }
}
