use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{design_with_intercept, Diagnostics, FactorError};
use crate::numeric::stats;

/// Consistency constant of the MAD for Gaussian data.
pub const MAD_CONSTANT: f64 = 0.6745;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobustLoss {
    Huber,
    Tukey,
}

impl RobustLoss {
    /// 95% Gaussian-efficiency tuning constant.
    pub fn default_kappa(self) -> f64 {
        match self {
            RobustLoss::Huber => 1.345,
            RobustLoss::Tukey => 4.685,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustConfig {
    pub loss: RobustLoss,
    /// Threshold in units of the robust residual scale.
    pub kappa: f64,
    pub max_iter: usize,
    /// Convergence threshold on the largest coefficient change.
    pub tol: f64,
    /// Holds the residual scale fixed instead of re-estimating it by MAD on
    /// every iteration.
    pub fixed_scale: Option<f64>,
}

impl RobustConfig {
    pub fn new(loss: RobustLoss) -> Self {
        Self { loss, kappa: loss.default_kappa(), max_iter: 100, tol: 1e-10, fixed_scale: None }
    }

    pub fn validate(&self) -> Result<(), FactorError> {
        if !(self.kappa > 0.0) || self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(FactorError::InvalidConfig(format!(
                "kappa {} max_iter {} tol {}",
                self.kappa, self.max_iter, self.tol
            )));
        }
        Ok(())
    }
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self::new(RobustLoss::Tukey)
    }
}

/// `(rho, psi, weight)` at scaled residual `x`; `weight = psi(x) / x` with
/// `weight(0) = 1`.
pub fn robust_loss(x: f64, loss: RobustLoss, kappa: f64) -> (f64, f64, f64) {
    let ax = x.abs();
    match loss {
        RobustLoss::Huber => {
            if ax <= kappa {
                (0.5 * x * x, x, 1.0)
            } else {
                (kappa * ax - 0.5 * kappa * kappa, kappa * x.signum(), kappa / ax)
            }
        }
        RobustLoss::Tukey => {
            let k2 = kappa * kappa;
            if ax <= kappa {
                let u = 1.0 - x * x / k2;
                (k2 / 6.0 * (1.0 - u * u * u), x * u * u, u * u)
            } else {
                (k2 / 6.0, 0.0, 0.0)
            }
        }
    }
}

/// `median(|x - median(x)|) / 0.6745`.
pub fn mad_scale(x: &[f64]) -> Result<f64, FactorError> {
    if x.len() < 2 {
        return Err(FactorError::InsufficientRows { needed: 2, got: x.len() });
    }
    let med = stats::median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    Ok(stats::median(&dev) / MAD_CONSTANT)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustFit {
    pub intercept: f64,
    pub coefficients: DVector<f64>,
    pub weights: Vec<f64>,
    pub scale: f64,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// `sum rho(residual / scale)` after each weighted solve.
    pub objective_trace: Vec<f64>,
    /// Two-sided normal p-values of the slope coefficients.
    pub p_values: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl RobustFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(self.coefficients.iter()).map(|(f, b)| f * b).sum::<f64>()
    }
}

/// Solves `(X'WX) beta = X'W h`, failing on a rank-deficient Gram matrix.
fn weighted_ls(x: &DMatrix<f64>, h: &DVector<f64>, w: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>), FactorError> {
    let mut xw = x.clone();
    for (mut row, &wi) in xw.row_iter_mut().zip(w) {
        row *= wi;
    }
    let gram = x.transpose() * &xw;
    let rhs = xw.transpose() * h;
    let scale = gram.diagonal().amax().max(f64::MIN_POSITIVE);
    let chol = gram.clone().cholesky().ok_or(FactorError::SingularDesign)?;
    let diag_min = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if diag_min <= 1e-13 * scale {
        return Err(FactorError::SingularDesign);
    }
    Ok((chol.solve(&rhs), chol.inverse()))
}

/// Robust linear regression `h = a + F b + xi` by iteratively reweighted
/// least squares from an OLS start. Exactly constant factor columns are
/// left out of the design and receive a zero coefficient.
pub fn fit_rlr(h: &[f64], f: &DMatrix<f64>, cfg: &RobustConfig) -> Result<RobustFit, FactorError> {
    cfg.validate()?;
    let n = h.len();
    let k = f.ncols();
    if f.nrows() != n {
        return Err(FactorError::DimensionMismatch(format!("{n} innovations vs {} factor rows", f.nrows())));
    }
    if n <= k + 1 {
        return Err(FactorError::InsufficientRows { needed: k + 2, got: n });
    }
    let active = super::active_columns(f);
    let x = design_with_intercept(f, &active);
    let hv = DVector::from_column_slice(h);

    let mut w = vec![1.0; n];
    let (mut beta, mut inv) = weighted_ls(&x, &hv, &w)?;
    let mut resid: Vec<f64> = (&hv - &x * &beta).iter().copied().collect();
    let mut scale = 0.0;
    let mut iterations = 0;
    let mut trace = Vec::new();
    let exact_tol = 1e-12 * h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for it in 1..=cfg.max_iter {
        scale = match cfg.fixed_scale {
            Some(s) => s,
            None => mad_scale(&resid)?,
        };
        if scale <= exact_tol {
            // every residual shares one value: the current solution is exact
            w.iter_mut().for_each(|wi| *wi = 1.0);
            break;
        }
        for (wi, r) in w.iter_mut().zip(&resid) {
            *wi = robust_loss(r / scale, cfg.loss, cfg.kappa).2;
        }
        let (next, next_inv) = weighted_ls(&x, &hv, &w)?;
        let change = (&next - &beta).amax();
        beta = next;
        inv = next_inv;
        resid = (&hv - &x * &beta).iter().copied().collect();
        trace.push(resid.iter().map(|r| robust_loss(r / scale, cfg.loss, cfg.kappa).0).sum());
        iterations = it;
        if change < cfg.tol {
            break;
        }
    }
    if cfg.fixed_scale.is_none() && scale > exact_tol {
        for (wi, r) in w.iter_mut().zip(&resid) {
            *wi = robust_loss(r / scale, cfg.loss, cfg.kappa).2;
        }
    }

    let mut coefficients = DVector::zeros(k);
    for (j, &c) in active.iter().enumerate() {
        coefficients[c] = beta[j + 1];
    }
    // Weighted residual variance for the coefficient covariance.
    let wsum: f64 = w.iter().sum();
    let sigma2 = w.iter().zip(&resid).map(|(wi, r)| wi * r * r).sum::<f64>() / (wsum - (active.len() + 1) as f64).max(1.0);
    let mut p_values = vec![1.0; k];
    for (j, &c) in active.iter().enumerate() {
        let se = (sigma2 * inv[(j + 1, j + 1)]).sqrt();
        p_values[c] = if se > 0.0 { super::two_sided_normal_p(beta[j + 1] / se) } else { 0.0 };
    }
    let diagnostics = Diagnostics::compute(h, &resid, (k + 1) as f64);
    Ok(RobustFit {
        intercept: beta[0],
        coefficients,
        weights: w,
        scale,
        residuals: resid,
        iterations,
        objective_trace: trace,
        p_values,
        diagnostics,
    })
}
