use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::{DataError, FactorSet, ReturnPanel};

/// The estimation data visible when deciding at row `anchor`: the `length`
/// rows `[anchor - length, anchor - 1]` of the return panel and of every
/// asset's factor panel. Row `anchor` itself is never included.
#[derive(Debug, Clone)]
pub struct RollingWindow {
    pub anchor: usize,
    /// Date of row `anchor`, when the panel has one (the anchor may sit one
    /// past the last observed row when forecasting beyond the data).
    pub anchor_date: Option<NaiveDate>,
    pub length: usize,
    pub dates: Vec<NaiveDate>,
    pub returns: DMatrix<f64>,
    /// Raw (not yet normalized) factor rows per asset.
    pub factors: Option<Vec<DMatrix<f64>>>,
}

impl RollingWindow {
    pub fn first_row(&self) -> usize {
        self.anchor - self.length
    }
}

/// Slices the window anchored at row `t`. `t` may equal the number of rows,
/// which yields the window used for forecasting past the end of the data.
pub fn make_window(
    returns: &ReturnPanel,
    factors: Option<&FactorSet>,
    t: usize,
    length: usize,
) -> Result<RollingWindow, DataError> {
    let rows = returns.n_dates();
    if length == 0 || t < length || t > rows {
        return Err(DataError::WindowOutOfRange { anchor: t, length, rows });
    }
    let start = t - length;
    let factors = match factors {
        Some(set) => {
            if set.dates().len() != rows {
                return Err(DataError::MisalignedSeries(
                    "factor set is not aligned with the return panel".into(),
                ));
            }
            Some(
                set.panels()
                    .iter()
                    .map(|p| p.values.rows(start, length).into_owned())
                    .collect(),
            )
        }
        None => None,
    };
    Ok(RollingWindow {
        anchor: t,
        anchor_date: returns.dates().get(t).copied(),
        length,
        dates: returns.dates()[start..t].to_vec(),
        returns: returns.returns().rows(start, length).into_owned(),
        factors,
    })
}
