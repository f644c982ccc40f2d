use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use tailfolio::backtest::{ledgers_from_csv, metrics_csv_string, run_backtest, simulate_date, value_paths_csv_string, MetricsReport};
use tailfolio::cvaropt::{optimize_portfolio, OptConfig, ScenarioMatrix};
use tailfolio::data::io::{load_dataset, write_atomic, Dataset, UniverseManifest};
use tailfolio::data::{compute_log_returns, make_window, ReturnPanel};
use tailfolio::timeseries::{fit_arma_garch, select_model_bic, FitOptions, FitRecord, SelectionOptions};

use crate::cli::Command;
use crate::config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Runs `command` and maps the outcome to an exit code; failures are
/// reported on standard error.
pub fn dispatch(cfg: &RunConfig, command: Command) -> i32 {
    let result = match command {
        Command::Fit => fit(cfg),
        Command::Simulate => simulate(cfg),
        Command::Optimize => optimize(cfg),
        Command::Backtest => backtest(cfg),
        Command::Report => report(cfg),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn load(cfg: &RunConfig, with_factors: bool) -> Result<Dataset> {
    let prices = cfg.prices.as_deref().ok_or_else(|| anyhow!("no price file configured"))?;
    let manifest = cfg.universe.as_deref().map(UniverseManifest::load).transpose().context("loading the universe manifest")?;
    let factors = if with_factors { cfg.factors.as_deref() } else { None };
    load_dataset(prices, factors, manifest.as_ref()).context("loading input data")
}

/// Return row at which the decision for `cfg.date` is taken; one past the
/// last row (a forecast beyond the data) when no date is configured.
fn decision_row(returns: &ReturnPanel, cfg: &RunConfig) -> Result<usize> {
    match cfg.date {
        None => Ok(returns.n_dates()),
        Some(d) => returns.dates().binary_search(&d).map_err(|_| anyhow!("date {d} is not a trading date of the price file")),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn fit(cfg: &RunConfig) -> Result<()> {
    let data = load(cfg, false)?;
    let returns = compute_log_returns(&data.prices)?;
    let ticker = cfg.ticker.clone().unwrap_or_else(|| returns.tickers()[0].clone());
    let i = returns.tickers().iter().position(|t| *t == ticker).ok_or_else(|| anyhow!("ticker {ticker} not in the price file"))?;
    let t = decision_row(&returns, cfg)?;
    let w = make_window(&returns, None, t, cfg.backtest.window).context("building the estimation window")?;
    let series: Vec<f64> = w.returns.column(i).iter().copied().collect();
    let opts = FitOptions { restarts: cfg.backtest.restarts, seed: cfg.seed.unwrap_or(0), ..FitOptions::default() };
    let fit = match cfg.backtest.fixed_spec {
        Some(spec) => fit_arma_garch(&series, spec, &opts),
        None => select_model_bic(&series, &SelectionOptions { max_order: cfg.backtest.max_order, fit: opts, parallel: true }),
    }
    .with_context(|| format!("ARMA-GARCH fit of {ticker}"))?;
    log::info!("{ticker}: {} loglik {:.4} bic {:.4}", fit.spec, fit.loglik, fit.bic);
    write(&cfg.out_dir, "fit.toml", &FitRecord::from_fit(&ticker, &fit).to_toml())
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let data = load(cfg, cfg.backtest.factor_model != tailfolio::FactorModelKind::None)?;
    let returns = compute_log_returns(&data.prices)?;
    let t = decision_row(&returns, cfg)?;
    let day = simulate_date(&returns, data.factors.as_ref(), t, &cfg.backtest)?;
    log::info!("{}: {} scenarios, NIG alpha_bar {:.4}", day.date, day.scenarios.n_scenarios(), day.nig.alpha_bar);
    write(&cfg.out_dir, "scenarios.csv", &day.scenarios.to_csv_string())
}

fn optimize(cfg: &RunConfig) -> Result<()> {
    let path = cfg.scenarios.as_deref().ok_or_else(|| anyhow!("no scenario file configured"))?;
    let scen = ScenarioMatrix::read_csv(path).with_context(|| format!("reading {}", path.display()))?;
    let ocfg = OptConfig {
        alpha: cfg.alpha,
        beta: cfg.backtest.beta,
        prev_weights: cfg.prev_weights.clone(),
        turnover_cap: cfg.backtest.turnover_cap,
        lp_tol: cfg.backtest.lp_tol,
        ..OptConfig::default()
    };
    let res = optimize_portfolio(&scen, &ocfg).context("mean-CVaR optimization")?;
    let mut text = String::from("asset,weight\n");
    for (a, w) in scen.assets().iter().zip(&res.weights) {
        text.push_str(&format!("{a},{w}\n"));
    }
    write(&cfg.out_dir, "weights.csv", &text)?;
    let summary = format!(
        "alpha = {}\nbeta = {}\nobjective = {}\nexpected_return = {}\ncvar = {}\nnu = {}\n",
        cfg.alpha, cfg.backtest.beta, res.objective, res.expected_return, res.cvar, res.nu
    );
    write(&cfg.out_dir, "optimum.toml", &summary)
}

fn backtest(cfg: &RunConfig) -> Result<()> {
    let needs_factors = cfg.backtest.factor_model != tailfolio::FactorModelKind::None;
    let data = load(cfg, needs_factors)?;
    let run = run_backtest(&data.prices, data.factors.as_ref(), &cfg.backtest)?;
    run.write_outputs(&cfg.out_dir).context("writing backtest outputs")?;
    write(&cfg.out_dir, "run.toml", &cfg.to_toml())?;
    for m in run.metrics() {
        log::info!("{}: total return {:.2}%, max drawdown {:.2}%", m.strategy, m.total_return_pct, m.max_drawdown_pct);
    }
    Ok(())
}

fn report(cfg: &RunConfig) -> Result<()> {
    let path = cfg.ledger.as_deref().ok_or_else(|| anyhow!("no ledger configured"))?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ledgers = ledgers_from_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
    if ledgers.is_empty() {
        bail!("{} holds no ledger rows", path.display());
    }
    let reports: Vec<MetricsReport> = ledgers.iter().map(MetricsReport::from_ledger).collect();
    write(&cfg.out_dir, "metrics.csv", &metrics_csv_string(&reports))?;
    write(&cfg.out_dir, "values.csv", &value_paths_csv_string(&ledgers))
}
