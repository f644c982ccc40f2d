use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::bessel::log_bessel_k;
use super::NigError;
use crate::numeric::linalg::cholesky_with_jitter;

/// GIG index of the NIG subfamily.
pub const NIG_LAMBDA: f64 = -0.5;

/// NIG law in the mean-one mixing parametrization:
/// `X = mu + Z gamma + sqrt(Z) L W`, `Z ~ GIG(-1/2, alpha_bar, alpha_bar)`
/// (inverse Gaussian with mean 1 and shape `alpha_bar`), `L L' = sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct NigParams {
    pub alpha_bar: f64,
    pub mu: DVector<f64>,
    pub gamma: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

/// Classical `(alpha, beta, delta, mu, Delta)` parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct NigClassic {
    pub alpha: f64,
    pub beta: DVector<f64>,
    pub delta: f64,
    pub mu: DVector<f64>,
    pub dispersion: DMatrix<f64>,
}

impl NigParams {
    pub fn new(alpha_bar: f64, mu: DVector<f64>, gamma: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self, NigError> {
        let p = Self { alpha_bar, mu, gamma, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn lambda(&self) -> f64 {
        NIG_LAMBDA
    }

    pub fn validate(&self) -> Result<(), NigError> {
        let d = self.mu.len();
        if self.gamma.len() != d || self.sigma.shape() != (d, d) {
            return Err(NigError::DimensionMismatch(format!(
                "mu {d}, gamma {}, sigma {:?}",
                self.gamma.len(),
                self.sigma.shape()
            )));
        }
        if !(self.alpha_bar > 0.0) || !self.alpha_bar.is_finite() {
            return Err(NigError::InvalidParameter(format!("alpha_bar must be positive, got {}", self.alpha_bar)));
        }
        if (&self.sigma - self.sigma.transpose()).amax() > 1e-12 * self.sigma.amax().max(1.0) {
            return Err(NigError::SingularDispersion);
        }
        if self.sigma.clone().cholesky().is_none() {
            return Err(NigError::SingularDispersion);
        }
        Ok(())
    }

    /// Variance of the mixing variable, `1 / alpha_bar`.
    pub fn mixing_variance(&self) -> f64 {
        1.0 / self.alpha_bar
    }

    /// `mu + gamma`.
    pub fn mean(&self) -> DVector<f64> {
        &self.mu + &self.gamma
    }

    /// `sigma + Var(Z) gamma gamma'`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.sigma + &self.gamma * self.gamma.transpose() * self.mixing_variance()
    }

    /// `Delta = sigma`, `beta = sigma^-1 gamma`, `delta = sqrt(alpha_bar)`,
    /// `alpha = sqrt(alpha_bar + gamma' sigma^-1 gamma)`.
    pub fn to_classic(&self) -> Result<NigClassic, NigError> {
        let chol = self.sigma.clone().cholesky().ok_or(NigError::SingularDispersion)?;
        let beta = chol.solve(&self.gamma);
        let quad = self.gamma.dot(&beta);
        Ok(NigClassic {
            alpha: (self.alpha_bar + quad).sqrt(),
            beta,
            delta: self.alpha_bar.sqrt(),
            mu: self.mu.clone(),
            dispersion: self.sigma.clone(),
        })
    }
}

impl NigClassic {
    /// Inverse of [`NigParams::to_classic`] for any classical parameter set:
    /// `alpha_bar = delta sqrt(alpha^2 - beta' Delta beta)`, and the mixing
    /// variable is rescaled by its mean `k = delta / sqrt(alpha^2 - beta' Delta beta)`
    /// so that `sigma = k Delta`, `gamma = k Delta beta`.
    pub fn to_params(&self) -> Result<NigParams, NigError> {
        let db = &self.dispersion * &self.beta;
        let psi = self.alpha * self.alpha - self.beta.dot(&db);
        if !(psi > 0.0) || !(self.delta > 0.0) {
            return Err(NigError::InvalidParameter("need alpha^2 > beta' Delta beta and delta > 0".into()));
        }
        let k = self.delta / psi.sqrt();
        NigParams::new(self.delta * psi.sqrt(), self.mu.clone(), db * k, &self.dispersion * k)
    }

    /// Equivalent parameters under the scale freedom of the classical form:
    /// `(c^(1/2d) alpha, beta, c^(-1/2d) delta, mu, c^(1/d) Delta)`.
    pub fn rescaled(&self, c: f64) -> Self {
        let d = self.mu.len() as f64;
        Self {
            alpha: c.powf(0.5 / d) * self.alpha,
            beta: self.beta.clone(),
            delta: c.powf(-0.5 / d) * self.delta,
            mu: self.mu.clone(),
            dispersion: &self.dispersion * c.powf(1.0 / d),
        }
    }

    /// Log density
    /// `ln[ delta |Delta|^(-1/2) / 2^((d-1)/2) (alpha / (pi q))^((d+1)/2)
    ///      K_{(d+1)/2}(alpha q) exp(delta sqrt(alpha^2 - beta' Delta beta) + beta'(x - mu)) ]`
    /// with `q = sqrt(delta^2 + (x - mu)' Delta^-1 (x - mu))`.
    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64, NigError> {
        let d = self.mu.len();
        if x.len() != d {
            return Err(NigError::DimensionMismatch(format!("point of length {} for dimension {d}", x.len())));
        }
        let chol = self.dispersion.clone().cholesky().ok_or(NigError::SingularDispersion)?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let dx = x - &self.mu;
        let qf = dx.dot(&chol.solve(&dx));
        let q = (self.delta * self.delta + qf).sqrt();
        let psi = self.alpha * self.alpha - self.beta.dot(&(&self.dispersion * &self.beta));
        let order = 0.5 * (d as f64 + 1.0);
        Ok(self.delta.ln() - 0.5 * log_det - 0.5 * (d as f64 - 1.0) * 2f64.ln()
            + order * (self.alpha / (PI * q)).ln()
            + log_bessel_k(order, self.alpha * q)?
            + self.delta * psi.sqrt()
            + self.beta.dot(&dx))
    }
}

/// Prepared evaluator for many density evaluations under one parameter set.
#[derive(Debug, Clone)]
pub struct NigEvaluator {
    mu: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    beta: DVector<f64>,
    alpha: f64,
    delta: f64,
    /// Terms of the log density that do not depend on the point.
    constant: f64,
}

impl NigEvaluator {
    pub fn new(params: &NigParams) -> Result<Self, NigError> {
        let (chol, _) = cholesky_with_jitter(&params.sigma).ok_or(NigError::SingularDispersion)?;
        let c = params.to_classic_with(&chol);
        let d = params.dim() as f64;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let order = 0.5 * (d + 1.0);
        let constant = c.delta.ln() - 0.5 * log_det - 0.5 * (d - 1.0) * 2f64.ln()
            + order * (c.alpha / PI).ln()
            + c.delta * params.alpha_bar.sqrt();
        Ok(Self { mu: c.mu, chol, beta: c.beta, alpha: c.alpha, delta: c.delta, constant })
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64, NigError> {
        let dx = x - &self.mu;
        let qf = dx.dot(&self.chol.solve(&dx));
        let q = (self.delta * self.delta + qf).sqrt();
        let order = 0.5 * (self.mu.len() as f64 + 1.0);
        Ok(self.constant - order * q.ln() + log_bessel_k(order, self.alpha * q)? + self.beta.dot(&dx))
    }

    /// Sum of log densities over the rows of `data`.
    pub fn log_likelihood(&self, data: &DMatrix<f64>) -> Result<f64, NigError> {
        let mut ll = 0.0;
        for row in data.row_iter() {
            ll += self.log_density(&row.transpose())?;
        }
        Ok(ll)
    }
}

impl NigParams {
    fn to_classic_with(&self, chol: &Cholesky<f64, Dyn>) -> NigClassic {
        let beta = chol.solve(&self.gamma);
        let quad = self.gamma.dot(&beta);
        NigClassic {
            alpha: (self.alpha_bar + quad).sqrt(),
            beta,
            delta: self.alpha_bar.sqrt(),
            mu: self.mu.clone(),
            dispersion: self.sigma.clone(),
        }
    }
}

/// Log density of `x` under `params`, via the classical parametrization.
pub fn nig_log_density(x: &DVector<f64>, params: &NigParams) -> Result<f64, NigError> {
    params.to_classic()?.log_density(x)
}

/// Text record: `lambda`, `alpha_bar`, `mu`, `gamma`, and `sigma` flattened
/// row-major with its dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NigRecord {
    pub lambda: f64,
    pub alpha_bar: f64,
    pub dim: usize,
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl NigRecord {
    pub fn from_params(p: &NigParams) -> Self {
        let d = p.dim();
        Self {
            lambda: NIG_LAMBDA,
            alpha_bar: p.alpha_bar,
            dim: d,
            mu: p.mu.iter().copied().collect(),
            gamma: p.gamma.iter().copied().collect(),
            sigma: (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| p.sigma[(i, j)]).collect(),
        }
    }

    pub fn to_params(&self) -> Result<NigParams, NigError> {
        let d = self.dim;
        if self.lambda != NIG_LAMBDA {
            return Err(NigError::Record(format!("lambda must be -0.5, got {}", self.lambda)));
        }
        if self.mu.len() != d || self.gamma.len() != d || self.sigma.len() != d * d {
            return Err(NigError::Record("vector lengths do not match dim".into()));
        }
        NigParams::new(
            self.alpha_bar,
            DVector::from_vec(self.mu.clone()),
            DVector::from_vec(self.gamma.clone()),
            DMatrix::from_row_slice(d, d, &self.sigma),
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("record serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self, NigError> {
        toml::from_str(s).map_err(|e| NigError::Record(e.to_string()))
    }
}
