use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use tailfolio::factors::{FactorModelKind, RobustLoss};

use crate::config::{resolve, ConfigError, FileConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "tailfolio", version, about = "Scenario-based mean-CVaR portfolio backtests")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Fit the BIC-selected ARMA-GARCH filter of one asset on one window.
    Fit,
    /// Generate the scenario matrix for one decision date.
    Simulate,
    /// Solve the mean-CVaR program for a scenario CSV.
    Optimize,
    /// Run the rolling out-of-sample backtest.
    Backtest,
    /// Recompute metric tables from a ledger CSV.
    Report,
}

fn comma_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?}"))).collect()
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub prices: Option<PathBuf>,
    /// Directory with one `<ticker>.csv` factor file per asset.
    #[arg(long, global = true)]
    pub factors: Option<PathBuf>,
    #[arg(long, global = true)]
    pub universe: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub log_level: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub window: Option<usize>,
    #[arg(long = "n-scenarios", global = true)]
    pub n_scenarios: Option<usize>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Single risk-reward weight; also the backtest grid unless `--alphas`.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Comma-separated backtest grid.
    #[arg(long, global = true, value_parser = comma_floats)]
    pub alphas: Option<::std::vec::Vec<f64>>,
    #[arg(long, global = true)]
    pub cost_rate: Option<f64>,
    #[arg(long, global = true)]
    pub turnover_cap: Option<f64>,
    #[arg(long, global = true)]
    pub no_turnover_cap: bool,
    #[arg(long, global = true)]
    pub factor_model: Option<FactorModelKind>,
    #[arg(long, global = true, value_parser = parse_loss)]
    pub robust_loss: Option<RobustLoss>,
    #[arg(long, global = true)]
    pub max_order: Option<usize>,
    /// `ar,ma,garch,arch` orders fitted instead of the BIC search.
    #[arg(long, global = true)]
    pub fixed_spec: Option<String>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub max_days: Option<usize>,
    #[arg(long, global = true)]
    pub lp_tol: Option<f64>,
    #[arg(long, global = true)]
    pub scenarios: Option<PathBuf>,
    #[arg(long, global = true, value_parser = comma_floats)]
    pub prev_weights: Option<::std::vec::Vec<f64>>,
    #[arg(long, global = true)]
    pub ticker: Option<String>,
    #[arg(long, global = true)]
    pub date: Option<NaiveDate>,
    #[arg(long, global = true)]
    pub ledger: Option<PathBuf>,
}

fn parse_loss(s: &str) -> Result<RobustLoss, String> {
    match s.to_ascii_lowercase().as_str() {
        "huber" => Ok(RobustLoss::Huber),
        "tukey" => Ok(RobustLoss::Tukey),
        _ => Err(format!("unknown loss {s:?} (huber | tukey)")),
    }
}

/// Reads the optional config file and merges the flags of `cli`.
pub fn parse_and_validate(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    resolve(file, &cli.overrides, Some(&cli.command))
}
