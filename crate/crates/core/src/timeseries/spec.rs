use std::fmt;

use serde::{Deserialize, Serialize};

use super::TimeseriesError;

/// Lag orders of the mean (`ar`, `ma`) and variance (`garch` on lagged
/// variances, `arch` on lagged squared residuals) equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArmaGarchSpec {
    pub ar: usize,
    pub ma: usize,
    pub garch: usize,
    pub arch: usize,
}

pub const MAX_ORDER: usize = 2;

impl ArmaGarchSpec {
    pub fn new(ar: usize, ma: usize, garch: usize, arch: usize) -> Result<Self, TimeseriesError> {
        let s = Self { ar, ma, garch, arch };
        if [ar, ma, garch, arch].iter().any(|&o| o > MAX_ORDER) {
            return Err(TimeseriesError::InvalidOrder(format!("{s}: orders must be in 0..={MAX_ORDER}")));
        }
        Ok(s)
    }

    /// Number of estimated coefficients, the two constants included.
    pub fn n_params(&self) -> usize {
        2 + self.ar + self.ma + self.garch + self.arch
    }

    /// Every specification with all four orders in `0..=max_order`, in
    /// lexicographic `(ar, ma, garch, arch)` order.
    pub fn enumerate(max_order: usize) -> Vec<Self> {
        let m = max_order.min(MAX_ORDER);
        let mut out = Vec::new();
        for ar in 0..=m {
            for ma in 0..=m {
                for garch in 0..=m {
                    for arch in 0..=m {
                        out.push(Self { ar, ma, garch, arch });
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for ArmaGarchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ARMA({},{})-GARCH({},{})", self.ar, self.ma, self.garch, self.arch)
    }
}
