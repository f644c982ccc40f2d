use nalgebra::DMatrix;

use super::FactorPanel;

/// Maps every factor column onto `[0, 1]` with its own min/max and records
/// the bounds. Constant columns map to 0.5.
pub fn normalize_factors(panel: &FactorPanel) -> FactorPanel {
    let bounds: Vec<(f64, f64)> = panel
        .values
        .column_iter()
        .map(|c| (c.min(), c.max()))
        .collect();
    normalize_with_bounds(panel, &bounds)
}

/// Applies previously recorded `(min, max)` bounds. Values outside the bounds
/// map outside `[0, 1]`; callers that need the unit interval clamp.
pub fn normalize_with_bounds(panel: &FactorPanel, bounds: &[(f64, f64)]) -> FactorPanel {
    let values = DMatrix::from_fn(panel.values.nrows(), panel.values.ncols(), |r, k| {
        scale(panel.values[(r, k)], bounds[k])
    });
    FactorPanel {
        ticker: panel.ticker.clone(),
        dates: panel.dates.clone(),
        factor_names: panel.factor_names.clone(),
        values,
        bounds: Some(bounds.to_vec()),
    }
}

pub(crate) fn scale(x: f64, (lo, hi): (f64, f64)) -> f64 {
    let span = hi - lo;
    if span > 0.0 {
        (x - lo) / span
    } else {
        0.5
    }
}

/// Column-wise min/max normalization of a bare matrix; returns the scaled
/// matrix and the bounds.
pub(crate) fn normalize_matrix(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<(f64, f64)>) {
    let bounds: Vec<(f64, f64)> = m.column_iter().map(|c| (c.min(), c.max())).collect();
    let out = DMatrix::from_fn(m.nrows(), m.ncols(), |r, k| scale(m[(r, k)], bounds[k]));
    (out, bounds)
}
