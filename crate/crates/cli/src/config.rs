//! Run configuration: a TOML file merged with command-line flags.
//!
//! ```toml
//! seed = 7
//!
//! [data]
//! prices = "prices.csv"        # date,<ticker>,... close prices
//! factors = "factors"          # directory holding <ticker>.csv factor files
//! universe = "universe.toml"   # optional ticker / factor manifest
//!
//! [output]
//! dir = "out"
//! log_level = "info"           # error | warn | info | debug | trace
//!
//! [backtest]
//! window = 765
//! n_scenarios = 10000
//! beta = 0.99
//! alphas = [0.0, 0.25, 0.5]
//! cost_rate = 0.0002
//! turnover_cap = 0.05
//! unconstrained_turnover = false
//! factor_model = "gam"          # none | rlr | gam
//! robust_loss = "tukey"         # huber | tukey
//! max_order = 2
//! fixed_spec = "1,0,1,1"        # ar,ma,garch,arch; skips the BIC search
//! restarts = 5
//! max_days = 250
//! lp_tol = 1e-9
//!
//! [optimize]
//! alpha = 0.5
//! scenarios = "scenarios.csv"
//! prev_weights = [0.5, 0.5]
//!
//! [select]
//! ticker = "AAA"               # asset for `fit`
//! date = "2021-06-01"          # decision date for `fit` / `simulate`
//! ledger = "out/ledger.csv"    # input of `report`
//! ```
//!
//! Relative paths in a file are taken relative to the file's directory.
//! Flags win over file values, file values over defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use tailfolio::backtest::BacktestConfig;
use tailfolio::factors::{FactorModelKind, RobustLoss};
use tailfolio::timeseries::ArmaGarchSpec;

use crate::cli::{Command, Overrides};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigProblem {
    pub field: String,
    pub message: String,
}

/// Every problem found while building a [`RunConfig`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub problems: Vec<ConfigProblem>,
}

impl ConfigError {
    fn one(field: &str, message: impl Into<String>) -> Self {
        Self { problems: vec![ConfigProblem { field: field.into(), message: message.into() }] }
    }

    pub fn fields(&self) -> Vec<&str> {
        self.problems.iter().map(|p| p.field.as_str()).collect()
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.problems.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "config error: field={}: {}", p.field, p.message)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub backtest: BacktestSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub select: SelectSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub prices: Option<PathBuf>,
    pub factors: Option<PathBuf>,
    pub universe: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub log_level: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestSection {
    pub window: Option<usize>,
    pub n_scenarios: Option<usize>,
    pub beta: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub cost_rate: Option<f64>,
    pub turnover_cap: Option<f64>,
    pub unconstrained_turnover: Option<bool>,
    pub factor_model: Option<FactorModelKind>,
    pub robust_loss: Option<RobustLoss>,
    pub max_order: Option<usize>,
    pub fixed_spec: Option<String>,
    pub restarts: Option<usize>,
    pub max_days: Option<usize>,
    pub lp_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub alpha: Option<f64>,
    pub scenarios: Option<PathBuf>,
    pub prev_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectSection {
    pub ticker: Option<String>,
    pub date: Option<NaiveDate>,
    pub ledger: Option<PathBuf>,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub prices: Option<PathBuf>,
    pub factors: Option<PathBuf>,
    pub universe: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub log_level: String,
    pub seed: Option<u64>,
    /// Its `seed` mirrors [`RunConfig::seed`] (0 when absent).
    pub backtest: BacktestConfig,
    pub alpha: f64,
    pub scenarios: Option<PathBuf>,
    pub prev_weights: Option<Vec<f64>>,
    pub ticker: Option<String>,
    pub date: Option<NaiveDate>,
    pub ledger: Option<PathBuf>,
}

pub const DEFAULT_ALPHA: f64 = 0.5;
const LOG_LEVELS: [&str; 6] = ["off", "error", "warn", "info", "debug", "trace"];

pub fn parse_spec(s: &str) -> Result<ArmaGarchSpec, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("{s:?} is not four comma-separated orders")))
        .collect::<Result<_, _>>()?;
    if parts.len() != 4 {
        return Err(format!("{s:?} is not four comma-separated orders"));
    }
    ArmaGarchSpec::new(parts[0], parts[1], parts[2], parts[3]).map_err(|e| e.to_string())
}

fn spec_string(s: &ArmaGarchSpec) -> String {
    format!("{},{},{},{}", s.ar, s.ma, s.garch, s.arch)
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::one("config", format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| ConfigError::one("config", format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    /// Makes relative paths relative to `base` (the config file's directory).
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.data.prices);
        fix(&mut self.data.factors);
        fix(&mut self.data.universe);
        fix(&mut self.output.dir);
        fix(&mut self.optimize.scenarios);
        fix(&mut self.select.ledger);
    }
}

impl RunConfig {
    /// The file form with every key present.
    pub fn to_file_config(&self) -> FileConfig {
        let b = &self.backtest;
        FileConfig {
            seed: self.seed,
            data: DataSection { prices: self.prices.clone(), factors: self.factors.clone(), universe: self.universe.clone() },
            output: OutputSection { dir: Some(self.out_dir.clone()), log_level: Some(self.log_level.clone()) },
            backtest: BacktestSection {
                window: Some(b.window),
                n_scenarios: Some(b.n_scenarios),
                beta: Some(b.beta),
                alphas: Some(b.alphas.clone()),
                cost_rate: Some(b.cost_rate),
                turnover_cap: b.turnover_cap,
                unconstrained_turnover: Some(b.turnover_cap.is_none()),
                factor_model: Some(b.factor_model),
                robust_loss: Some(b.robust_loss),
                max_order: Some(b.max_order),
                fixed_spec: b.fixed_spec.as_ref().map(spec_string),
                restarts: Some(b.restarts),
                max_days: b.max_days,
                lp_tol: Some(b.lp_tol),
            },
            optimize: OptimizeSection { alpha: Some(self.alpha), scenarios: self.scenarios.clone(), prev_weights: self.prev_weights.clone() },
            select: SelectSection { ticker: self.ticker.clone(), date: self.date, ledger: self.ledger.clone() },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file_config()).expect("run configuration is always serializable")
    }
}

/// Merges `file` and `flags` over the defaults and validates the result for
/// `command`, collecting every problem.
pub fn resolve(file: FileConfig, flags: &Overrides, command: Option<&Command>) -> Result<RunConfig, ConfigError> {
    let mut problems = Vec::new();
    let mut bad = |field: &str, message: String| problems.push(ConfigProblem { field: field.into(), message });
    let fb = file.backtest;
    let d = BacktestConfig::default();

    let fixed_spec = match flags.fixed_spec.clone().or(fb.fixed_spec) {
        None => None,
        Some(s) => match parse_spec(&s) {
            Ok(spec) => Some(spec),
            Err(e) => {
                bad("fixed_spec", e);
                None
            }
        },
    };
    let unconstrained = flags.no_turnover_cap || fb.unconstrained_turnover.unwrap_or(false);
    let seed = flags.seed.or(file.seed);
    let mut alphas = flags.alphas.clone().or(fb.alphas).unwrap_or(d.alphas);
    let alpha = flags.alpha.or(file.optimize.alpha).unwrap_or(DEFAULT_ALPHA);
    if flags.alpha.is_some() && flags.alphas.is_none() {
        alphas = vec![alpha];
    }
    let backtest = BacktestConfig {
        window: flags.window.or(fb.window).unwrap_or(d.window),
        n_scenarios: flags.n_scenarios.or(fb.n_scenarios).unwrap_or(d.n_scenarios),
        beta: flags.beta.or(fb.beta).unwrap_or(d.beta),
        alphas,
        cost_rate: flags.cost_rate.or(fb.cost_rate).unwrap_or(d.cost_rate),
        turnover_cap: if unconstrained { None } else { flags.turnover_cap.or(fb.turnover_cap).or(d.turnover_cap) },
        factor_model: flags.factor_model.or(fb.factor_model).unwrap_or(d.factor_model),
        robust_loss: flags.robust_loss.or(fb.robust_loss).unwrap_or(d.robust_loss),
        seed: seed.unwrap_or(0),
        max_order: flags.max_order.or(fb.max_order).unwrap_or(d.max_order),
        fixed_spec,
        restarts: flags.restarts.or(fb.restarts).unwrap_or(d.restarts),
        max_days: flags.max_days.or(fb.max_days),
        lp_tol: flags.lp_tol.or(fb.lp_tol).unwrap_or(d.lp_tol),
    };
    for p in backtest.problems() {
        let (field, msg) = p.split_once(": ").unwrap_or(("backtest", p.as_str()));
        bad(field, msg.to_string());
    }
    if !(0.0..=1.0).contains(&alpha) {
        bad("alpha", format!("{alpha} outside [0, 1]"));
    }

    let cfg = RunConfig {
        prices: flags.prices.clone().or(file.data.prices),
        factors: flags.factors.clone().or(file.data.factors),
        universe: flags.universe.clone().or(file.data.universe),
        out_dir: flags.out_dir.clone().or(file.output.dir).unwrap_or_else(|| PathBuf::from("out")),
        log_level: flags.log_level.clone().or(file.output.log_level).unwrap_or_else(|| "info".into()),
        seed,
        backtest,
        alpha,
        scenarios: flags.scenarios.clone().or(file.optimize.scenarios),
        prev_weights: flags.prev_weights.clone().or(file.optimize.prev_weights),
        ticker: flags.ticker.clone().or(file.select.ticker),
        date: flags.date.or(file.select.date),
        ledger: flags.ledger.clone().or(file.select.ledger),
    };
    if !LOG_LEVELS.contains(&cfg.log_level.to_ascii_lowercase().as_str()) {
        bad("log_level", format!("{:?} is not one of {}", cfg.log_level, LOG_LEVELS.join(", ")));
    }

    let mut require = |field: &str, path: &Option<PathBuf>, needed: bool| match path {
        None if needed => bad(field, "required by this subcommand".into()),
        Some(p) if !p.exists() => bad(field, format!("{} does not exist", p.display())),
        _ => {}
    };
    let (needs_prices, needs_factors, needs_scen, needs_ledger, needs_seed) = match command {
        Some(Command::Fit) => (true, false, false, false, false),
        Some(Command::Simulate) | Some(Command::Backtest) => {
            (true, cfg.backtest.factor_model != FactorModelKind::None, false, false, true)
        }
        Some(Command::Optimize) => (false, false, true, false, false),
        Some(Command::Report) => (false, false, false, true, false),
        None => (false, false, false, false, false),
    };
    require("prices", &cfg.prices, needs_prices);
    require("factors", &cfg.factors, needs_factors);
    require("universe", &cfg.universe, false);
    require("scenarios", &cfg.scenarios, needs_scen);
    require("ledger", &cfg.ledger, needs_ledger);
    if needs_seed && cfg.seed.is_none() {
        bad("seed", "required by this subcommand".into());
    }
    if let Some(w) = &cfg.prev_weights {
        let s: f64 = w.iter().sum();
        if w.iter().any(|x| !(*x >= 0.0)) || (s - 1.0).abs() > 1e-6 {
            bad("prev_weights", format!("must be non-negative and sum to 1 (sum {s})"));
        }
    }

    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { problems })
    }
}
