use serde::{Deserialize, Serialize};

use super::{ArmaGarchFit, ArmaGarchParams, TimeseriesError};

/// Key-value audit record of a fit: orders, coefficients, likelihood, BIC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub ticker: String,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "P")]
    pub garch_order: usize,
    #[serde(rename = "Q")]
    pub arch_order: usize,
    pub c1: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub c2: f64,
    pub garch: Vec<f64>,
    pub arch: Vec<f64>,
    pub loglik: f64,
    pub bic: f64,
    pub n_obs: usize,
}

impl FitRecord {
    pub fn from_fit(ticker: &str, fit: &ArmaGarchFit) -> Self {
        let p = &fit.params;
        Self {
            ticker: ticker.to_string(),
            p: fit.spec.ar,
            q: fit.spec.ma,
            garch_order: fit.spec.garch,
            arch_order: fit.spec.arch,
            c1: p.c1,
            ar: p.ar.clone(),
            ma: p.ma.clone(),
            c2: p.c2,
            garch: p.garch.clone(),
            arch: p.arch.clone(),
            loglik: fit.loglik,
            bic: fit.bic,
            n_obs: fit.n_obs,
        }
    }

    pub fn params(&self) -> Result<ArmaGarchParams, TimeseriesError> {
        let spec = super::ArmaGarchSpec::new(self.p, self.q, self.garch_order, self.arch_order)?;
        let lens = [(self.ar.len(), spec.ar), (self.ma.len(), spec.ma), (self.garch.len(), spec.garch), (self.arch.len(), spec.arch)];
        if lens.iter().any(|(a, b)| a != b) {
            return Err(TimeseriesError::Record("coefficient count does not match orders".into()));
        }
        Ok(ArmaGarchParams {
            spec,
            c1: self.c1,
            ar: self.ar.clone(),
            ma: self.ma.clone(),
            c2: self.c2,
            garch: self.garch.clone(),
            arch: self.arch.clone(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("fit record serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self, TimeseriesError> {
        toml::from_str(s).map_err(|e| TimeseriesError::Record(e.to_string()))
    }
}

/// Serializes several records as an array of `[[fit]]` tables.
pub fn records_to_toml(records: &[FitRecord]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        fit: &'a [FitRecord],
    }
    toml::to_string(&Doc { fit: records }).expect("fit records serialize")
}

pub fn records_from_toml(s: &str) -> Result<Vec<FitRecord>, TimeseriesError> {
    #[derive(Deserialize)]
    struct Doc {
        fit: Vec<FitRecord>,
    }
    toml::from_str::<Doc>(s).map(|d| d.fit).map_err(|e| TimeseriesError::Record(e.to_string()))
}
