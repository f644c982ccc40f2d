//! Factor models for standardized innovations: robust linear regression
//! (Huber / Tukey IRLS) and a penalized B-spline additive model. Both yield
//! residuals for the joint residual model and a conditional mean for
//! simulation.

mod diagnostics;
mod gam;
mod robust;
mod spline;

pub use diagnostics::{diagnostics_csv_string, write_diagnostics_csv, DiagnosticRecord, Diagnostics};
pub use gam::{fit_gam, gcv_grid, GamFit, Lambdas};
pub use robust::{fit_rlr, mad_scale, robust_loss, RobustConfig, RobustFit, RobustLoss, MAD_CONSTANT};
pub use spline::{bspline_basis, SplineBasis};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("weighted Gram matrix is rank deficient")]
    SingularDesign,
    #[error("penalized system is singular")]
    SingularSystem,
    #[error("need at least {needed} rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },
    #[error("factor value {0} outside [0, 1]")]
    DomainViolation(f64),
    #[error("spline input {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown factor model {0:?} (expected none, rlr or gam)")]
    UnknownModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Indices of factor columns that are not exactly constant.
pub(crate) fn active_columns(f: &DMatrix<f64>) -> Vec<usize> {
    (0..f.ncols())
        .filter(|&c| {
            let col = f.column(c);
            col.iter().any(|v| *v != col[0])
        })
        .collect()
}

/// `[1 | F[:, active]]`.
pub(crate) fn design_with_intercept(f: &DMatrix<f64>, active: &[usize]) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(f.nrows(), active.len() + 1);
    x.column_mut(0).fill(1.0);
    for (j, &c) in active.iter().enumerate() {
        x.set_column(j + 1, &f.column(c));
    }
    x
}

pub(crate) fn two_sided_normal_p(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorModelKind {
    None,
    Rlr,
    Gam,
}

impl FactorModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FactorModelKind::None => "none",
            FactorModelKind::Rlr => "rlr",
            FactorModelKind::Gam => "gam",
        }
    }
}

impl fmt::Display for FactorModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FactorModelKind {
    type Err = FactorError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(FactorModelKind::None),
            "rlr" => Ok(FactorModelKind::Rlr),
            "gam" => Ok(FactorModelKind::Gam),
            _ => Err(FactorError::UnknownModel(s.to_string())),
        }
    }
}

/// Settings for whichever factor model is selected.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModelConfig {
    pub kind: FactorModelKind,
    pub robust: RobustConfig,
    pub basis: SplineBasis,
    pub lambdas: Lambdas,
}

impl FactorModelConfig {
    pub fn new(kind: FactorModelKind) -> Self {
        Self { kind, robust: RobustConfig::default(), basis: SplineBasis::cubic_default(), lambdas: Lambdas::Auto }
    }

    /// Fits the configured model; `f` is ignored for the pass-through.
    pub fn fit(&self, h: &[f64], f: Option<&DMatrix<f64>>) -> Result<FactorFit, FactorError> {
        let need = || FactorError::InvalidConfig(format!("factor model {} needs factor data", self.kind));
        match self.kind {
            FactorModelKind::None => Ok(FactorFit::None { residuals: h.to_vec() }),
            FactorModelKind::Rlr => Ok(FactorFit::Robust(fit_rlr(h, f.ok_or_else(need)?, &self.robust)?)),
            FactorModelKind::Gam => Ok(FactorFit::Gam(fit_gam(h, f.ok_or_else(need)?, &self.basis, &self.lambdas)?)),
        }
    }
}

/// A fitted factor model or the pass-through (`xi = h`).
#[derive(Debug, Clone, PartialEq)]
pub enum FactorFit {
    Robust(RobustFit),
    Gam(GamFit),
    None { residuals: Vec<f64> },
}

impl FactorFit {
    pub fn kind(&self) -> FactorModelKind {
        match self {
            FactorFit::Robust(_) => FactorModelKind::Rlr,
            FactorFit::Gam(_) => FactorModelKind::Gam,
            FactorFit::None { .. } => FactorModelKind::None,
        }
    }

    pub fn residuals(&self) -> &[f64] {
        match self {
            FactorFit::Robust(r) => &r.residuals,
            FactorFit::Gam(g) => &g.residuals,
            FactorFit::None { residuals } => residuals,
        }
    }

    /// Effective number of parameters used by the diagnostics.
    pub fn edf(&self) -> f64 {
        match self {
            FactorFit::Robust(r) => (r.coefficients.len() + 1) as f64,
            FactorFit::Gam(g) => g.total_edf,
            FactorFit::None { .. } => 0.0,
        }
    }

    pub fn p_values(&self) -> &[f64] {
        match self {
            FactorFit::Robust(r) => &r.p_values,
            FactorFit::Gam(g) => &g.p_values,
            FactorFit::None { .. } => &[],
        }
    }

    /// Conditional mean of the innovation given a factor row. GAM inputs
    /// are clamped into [0, 1].
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            FactorFit::Robust(r) => r.predict(row),
            FactorFit::Gam(g) => g.predict(row),
            FactorFit::None { .. } => 0.0,
        }
    }

    /// One character per factor: `1` when the p-value is below `level`.
    pub fn pvalue_flags(&self, level: f64) -> String {
        self.p_values().iter().map(|p| if *p < level { '1' } else { '0' }).collect()
    }
}

/// Adjusted R², MAE and BIC of `fit` on `(h, F)`.
pub fn diagnostics(fit: &FactorFit, h: &[f64], f: &DMatrix<f64>) -> Diagnostics {
    let resid: Vec<f64> = h
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let row: Vec<f64> = f.row(i).iter().copied().collect();
            y - fit.predict(&row)
        })
        .collect();
    Diagnostics::compute(h, &resid, fit.edf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_through_predicts_zero() {
        let fit = FactorModelConfig::new(FactorModelKind::None).fit(&[0.1, -0.2], None).unwrap();
        assert_eq!(fit.predict(&[0.3, 0.9]), 0.0);
        assert_eq!(fit.residuals(), &[0.1, -0.2]);
        assert_eq!(fit.pvalue_flags(0.05), "");
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("GAM".parse::<FactorModelKind>().unwrap(), FactorModelKind::Gam);
        assert!("ols".parse::<FactorModelKind>().is_err());
        assert_eq!(FactorModelKind::Rlr.to_string(), "rlr");
    }

    #[test]
    fn diagnostics_match_fit_residuals() {
        let f = DMatrix::from_fn(80, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 / 10.0);
        let h: Vec<f64> = (0..80).map(|i| f[(i, 0)] * 0.4 + ((i * 13) % 5) as f64 * 0.01).collect();
        for kind in [FactorModelKind::Rlr, FactorModelKind::Gam] {
            let fit = FactorModelConfig::new(kind).fit(&h, Some(&f)).unwrap();
            let d = diagnostics(&fit, &h, &f);
            let own = match &fit {
                FactorFit::Robust(r) => r.diagnostics,
                FactorFit::Gam(g) => g.diagnostics,
                FactorFit::None { .. } => unreachable!(),
            };
            assert!((d.mae - own.mae).abs() < 1e-12 && (d.adj_r2 - own.adj_r2).abs() < 1e-12);
        }
    }
}
