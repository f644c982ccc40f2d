use serde::{Deserialize, Serialize};

use super::BacktestError;
use crate::factors::{FactorModelKind, RobustLoss};
use crate::timeseries::ArmaGarchSpec;

/// Risk-reward weights reported by default.
pub const DEFAULT_ALPHAS: [f64; 8] = [0.0, 0.25, 0.5, 0.75, 0.85, 0.9, 0.95, 0.98];

/// Smallest estimation window the pipeline accepts.
pub const MIN_WINDOW: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    /// Estimation window length in return observations.
    pub window: usize,
    pub n_scenarios: usize,
    pub beta: f64,
    pub alphas: Vec<f64>,
    /// Proportional cost per unit of traded weight.
    pub cost_rate: f64,
    /// Cap on `sum |theta_t - theta_{t-1}|`; `None` disables it.
    pub turnover_cap: Option<f64>,
    pub factor_model: FactorModelKind,
    pub robust_loss: RobustLoss,
    pub seed: u64,
    /// Largest ARMA and GARCH order tried by the BIC search.
    pub max_order: usize,
    /// Skips the BIC search and fits this specification for every asset.
    pub fixed_spec: Option<ArmaGarchSpec>,
    pub restarts: usize,
    /// Stops after this many out-of-sample days.
    pub max_days: Option<usize>,
    pub lp_tol: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            window: 765,
            n_scenarios: 10_000,
            beta: 0.99,
            alphas: DEFAULT_ALPHAS.to_vec(),
            cost_rate: 0.0002,
            turnover_cap: Some(0.05),
            factor_model: FactorModelKind::None,
            robust_loss: RobustLoss::Tukey,
            seed: 0,
            max_order: 2,
            fixed_spec: None,
            restarts: 5,
            max_days: None,
            lp_tol: 1e-9,
        }
    }
}

impl BacktestConfig {
    /// Every violated constraint, one message each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.window < MIN_WINDOW {
            out.push(format!("window: {} is below the minimum of {MIN_WINDOW}", self.window));
        }
        if self.n_scenarios == 0 {
            out.push("n_scenarios: must be positive".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            out.push(format!("beta: {} outside (0, 1)", self.beta));
        }
        if self.alphas.is_empty() {
            out.push("alphas: empty grid".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            out.push(format!("alphas: {a} outside [0, 1]"));
        }
        if !(self.cost_rate >= 0.0 && self.cost_rate < 1.0) {
            out.push(format!("cost_rate: {} outside [0, 1)", self.cost_rate));
        }
        if let Some(cap) = self.turnover_cap {
            if !(cap >= 0.0 && cap.is_finite()) {
                out.push(format!("turnover_cap: {cap} must be finite and non-negative"));
            }
        }
        if self.max_order > crate::timeseries::MAX_ORDER {
            out.push(format!("max_order: {} exceeds {}", self.max_order, crate::timeseries::MAX_ORDER));
        }
        if self.restarts == 0 {
            out.push("restarts: must be at least 1".into());
        }
        if self.max_days == Some(0) {
            out.push("max_days: must be positive".into());
        }
        if !(self.lp_tol > 0.0 && self.lp_tol < 1e-3) {
            out.push(format!("lp_tol: {} outside (0, 1e-3)", self.lp_tol));
        }
        out
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(BacktestError::InvalidConfig(p.join("; ")))
        }
    }

    /// Display name of the strategy run at `alpha`.
    pub fn strategy_name(&self, alpha: f64) -> String {
        format!("{}_a{alpha:.2}", self.factor_model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocol() {
        let c = BacktestConfig::default();
        assert_eq!((c.window, c.n_scenarios, c.beta, c.cost_rate, c.turnover_cap), (765, 10_000, 0.99, 0.0002, Some(0.05)));
        assert!(c.problems().is_empty());
    }

    #[test]
    fn every_problem_is_listed() {
        let c = BacktestConfig { window: 10, beta: 1.5, alphas: vec![2.0], restarts: 0, ..BacktestConfig::default() };
        let p = c.problems();
        assert_eq!(p.len(), 4, "{p:?}");
        assert!(p[0].starts_with("window"));
    }

    #[test]
    fn toml_round_trip() {
        let c = BacktestConfig { fixed_spec: Some(ArmaGarchSpec::new(1, 0, 1, 1).unwrap()), factor_model: FactorModelKind::Gam, ..BacktestConfig::default() };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<BacktestConfig>(&text).unwrap(), c);
        let partial: BacktestConfig = toml::from_str("window = 300\nfactor_model = \"rlr\"").unwrap();
        assert_eq!(partial.window, 300);
        assert_eq!(partial.factor_model, FactorModelKind::Rlr);
        assert!(toml::from_str::<BacktestConfig>("windw = 3").is_err());
    }
}
