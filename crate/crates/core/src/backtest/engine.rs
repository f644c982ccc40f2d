//! The daily rolling-window pipeline.
//!
//! For every out-of-sample row `t` the models see only return rows
//! `[t - window, t - 1]` and the factor rows of the same dates. The
//! innovation at `tau` is regressed on the factor row at `tau - 1`, so the
//! first innovation of a window is dropped and the last factor row of the
//! window is the regressor of the forecast for `t`. Factors are min-max
//! normalized over the window.

use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::pca::{PcaDynamics, PcaWindow};
use super::report::{metrics_csv_string, value_paths_csv_string, MetricsReport};
use super::{ewbh_benchmark, ledgers_to_csv, BacktestConfig, BacktestError, BacktestLedger};
use crate::cvaropt::{optimize_portfolio, OptConfig, Route, ScenarioMatrix};
use crate::data::{compute_log_returns, make_window, normalize_matrix, FactorSet, PricePanel, ReturnPanel, RollingWindow};
use crate::factors::{diagnostics_csv_string, DiagnosticRecord, FactorFit, FactorModelConfig, FactorModelKind, RobustConfig};
use crate::nig::{fit_nig_em, sample_nig, EmOptions, NigParams};
use crate::timeseries::{fit_arma_garch, forecast_many, select_model_bic, ArmaGarchFit, FitOptions, SelectionOptions};

/// SplitMix64 finalizer folded over `parts`; decorrelates per-date and
/// per-asset RNG streams derived from one run seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, p| mix(acc ^ mix(*p)))
}

/// Selected filter of one asset on one date.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRecord {
    pub date: NaiveDate,
    pub ticker: String,
    pub spec: String,
    pub loglik: f64,
    pub bic: f64,
    /// Factor-model mean of the next innovation.
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NigRecord {
    pub date: NaiveDate,
    pub alpha_bar: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Everything produced by one backtest.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRun {
    pub config: BacktestConfig,
    pub tickers: Vec<String>,
    /// One optimized strategy per alpha, in grid order.
    pub strategies: Vec<BacktestLedger>,
    pub benchmark: BacktestLedger,
    pub models: Vec<ModelRecord>,
    pub nig: Vec<NigRecord>,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub pca: PcaDynamics,
}

/// Scenario set and model state for one decision date.
#[derive(Debug, Clone)]
pub struct DateScenarios {
    pub date: NaiveDate,
    pub scenarios: ScenarioMatrix,
    pub fits: Vec<ArmaGarchFit>,
    pub factor_fits: Vec<FactorFit>,
    pub predictions: Vec<f64>,
    pub nig: NigParams,
    pub nig_trace: (f64, usize, bool),
    /// Standardized innovations with the first row dropped, window - 1 rows.
    pub innovations: DMatrix<f64>,
    pub residuals: DMatrix<f64>,
}

fn stage_err(date: NaiveDate, stage: impl Into<String>) -> impl FnOnce(Box<dyn std::error::Error + Send + Sync>) -> BacktestError {
    let stage = stage.into();
    move |source| BacktestError::Stage { date, stage, source }
}

/// Per-asset steps: filter selection, innovations, factor regression.
fn fit_asset(
    w: &RollingWindow,
    i: usize,
    ticker: &str,
    date: NaiveDate,
    cfg: &BacktestConfig,
    fcfg: &FactorModelConfig,
) -> Result<(ArmaGarchFit, FactorFit, f64), BacktestError> {
    let series: Vec<f64> = w.returns.column(i).iter().copied().collect();
    let fit_opts = FitOptions { restarts: cfg.restarts, seed: derive_seed(cfg.seed, &[w.anchor as u64, i as u64]), ..FitOptions::default() };
    let fit = match cfg.fixed_spec {
        Some(spec) => fit_arma_garch(&series, spec, &fit_opts),
        None => select_model_bic(&series, &SelectionOptions { max_order: cfg.max_order, fit: fit_opts, parallel: true }),
    }
    .map_err(|e| stage_err(date, format!("ARMA-GARCH fit of {ticker}"))(Box::new(e)))?;

    let h = &fit.h[1..];
    let (ffit, pred) = match (fcfg.kind, &w.factors) {
        (FactorModelKind::None, _) => (fcfg.fit(h, None).map_err(|e| stage_err(date, "factor model")(Box::new(e)))?, 0.0),
        (_, Some(raw)) => {
            let (norm, _) = normalize_matrix(&raw[i]);
            let regressors = norm.rows(0, w.length - 1).into_owned();
            let ffit = fcfg
                .fit(h, Some(&regressors))
                .map_err(|e| stage_err(date, format!("{} factor model of {ticker}", fcfg.kind))(Box::new(e)))?;
            let last: Vec<f64> = norm.row(w.length - 1).iter().copied().collect();
            let pred = ffit.predict(&last);
            (ffit, pred)
        }
        (_, None) => return Err(BacktestError::InvalidConfig(format!("factor model {} needs factor data", fcfg.kind))),
    };
    Ok((fit, ffit, pred))
}

/// Steps one to four of the pipeline for the decision at return row `t`.
pub fn simulate_date(
    returns: &ReturnPanel,
    factors: Option<&FactorSet>,
    t: usize,
    cfg: &BacktestConfig,
) -> Result<DateScenarios, BacktestError> {
    let w = make_window(returns, factors, t, cfg.window)?;
    let date = w.anchor_date.unwrap_or_else(|| *w.dates.last().expect("window is non-empty"));
    let tickers = returns.tickers();
    let n = tickers.len();
    let fcfg = FactorModelConfig { robust: RobustConfig::new(cfg.robust_loss), ..FactorModelConfig::new(cfg.factor_model) };

    let per_asset: Vec<(ArmaGarchFit, FactorFit, f64)> =
        (0..n).into_par_iter().map(|i| fit_asset(&w, i, &tickers[i], date, cfg, &fcfg)).collect::<Result<_, _>>()?;

    let rows = cfg.window - 1;
    let innovations = DMatrix::from_fn(rows, n, |r, i| per_asset[i].0.h[r + 1]);
    let residuals = DMatrix::from_fn(rows, n, |r, i| per_asset[i].1.residuals()[r]);
    let (nig, trace) = fit_nig_em(&residuals, &EmOptions::default()).map_err(|e| stage_err(date, "NIG fit")(Box::new(e)))?;
    let xi = sample_nig(&nig, cfg.n_scenarios, derive_seed(cfg.seed, &[t as u64, u64::MAX]))
        .map_err(|e| stage_err(date, "NIG sampling")(Box::new(e)))?;

    let mut sims = DMatrix::zeros(cfg.n_scenarios, n);
    for (i, (fit, _, pred)) in per_asset.iter().enumerate() {
        let h_sim: Vec<f64> = xi.column(i).iter().map(|x| pred + x).collect();
        let r = forecast_many(fit, &h_sim).map_err(|e| stage_err(date, format!("forecast of {}", tickers[i]))(Box::new(e)))?;
        for (s, v) in r.into_iter().enumerate() {
            sims[(s, i)] = v.exp_m1();
        }
    }
    let scenarios = ScenarioMatrix::with_assets(sims, tickers.to_vec()).map_err(|e| stage_err(date, "scenario assembly")(Box::new(e)))?;
    let predictions = per_asset.iter().map(|a| a.2).collect();
    let (fits, factor_fits): (Vec<_>, Vec<_>) = per_asset.into_iter().map(|(f, g, _)| (f, g)).unzip();
    Ok(DateScenarios {
        date,
        scenarios,
        fits,
        factor_fits,
        predictions,
        nig,
        nig_trace: (*trace.loglik.last().unwrap_or(&f64::NAN), trace.iterations, trace.converged),
        innovations,
        residuals,
    })
}

fn check_inputs(returns: &ReturnPanel, factors: Option<&FactorSet>, cfg: &BacktestConfig) -> Result<(), BacktestError> {
    cfg.validate()?;
    if returns.n_dates() < cfg.window + 1 {
        return Err(BacktestError::InsufficientData { needed: cfg.window + 2, got: returns.n_dates() + 1 });
    }
    match factors {
        None if cfg.factor_model != FactorModelKind::None => {
            Err(BacktestError::InvalidConfig(format!("factor model {} needs factor data", cfg.factor_model)))
        }
        Some(f) if f.dates() != returns.dates() || f.panels().len() != returns.n_assets() => {
            Err(BacktestError::InvalidConfig("factor set is not aligned with the return panel".into()))
        }
        _ => Ok(()),
    }
}

/// Out-of-sample return rows covered by a run.
pub fn out_of_sample_rows(n_returns: usize, cfg: &BacktestConfig) -> std::ops::Range<usize> {
    let end = cfg.max_days.map_or(n_returns, |d| n_returns.min(cfg.window + d));
    cfg.window..end
}

/// Runs the daily pipeline over every out-of-sample date. `factors` must be
/// aligned with the log-return dates (price dates minus the first).
pub fn run_backtest(prices: &PricePanel, factors: Option<&FactorSet>, cfg: &BacktestConfig) -> Result<BacktestRun, BacktestError> {
    let returns = compute_log_returns(prices)?;
    check_inputs(&returns, factors, cfg)?;
    let factors = if cfg.factor_model == FactorModelKind::None { None } else { factors };
    let tickers = returns.tickers().to_vec();
    let n = tickers.len();
    let rows = out_of_sample_rows(returns.n_dates(), cfg);

    let mut strategies: Vec<BacktestLedger> =
        cfg.alphas.iter().map(|&a| BacktestLedger::new(cfg.strategy_name(a), Some(a), tickers.clone())).collect();
    let mut models = Vec::new();
    let mut nig = Vec::new();
    let mut diagnostics = Vec::new();
    let mut pca: Option<PcaDynamics> = None;
    let total = rows.len();

    for (k, t) in rows.clone().enumerate() {
        let day = simulate_date(&returns, factors, t, cfg)?;
        let date = day.date;
        log::info!("{date}: day {}/{total}, alpha_bar {:.3}", k + 1, day.nig.alpha_bar);

        for (i, fit) in day.fits.iter().enumerate() {
            models.push(ModelRecord {
                date,
                ticker: tickers[i].clone(),
                spec: fit.spec.to_string(),
                loglik: fit.loglik,
                bic: fit.bic,
                prediction: day.predictions[i],
            });
            let ff = &day.factor_fits[i];
            let diag = match ff {
                FactorFit::Robust(r) => Some(r.diagnostics),
                FactorFit::Gam(g) => Some(g.diagnostics),
                FactorFit::None { .. } => None,
            };
            if let Some(d) = diag {
                diagnostics.push(DiagnosticRecord {
                    date,
                    ticker: tickers[i].clone(),
                    model: ff.kind(),
                    adj_r2: d.adj_r2,
                    mae: d.mae,
                    bic: d.bic,
                    pvalue_flags: ff.pvalue_flags(0.05),
                });
            }
        }
        let (ll, iters, conv) = day.nig_trace;
        nig.push(NigRecord { date, alpha_bar: day.nig.alpha_bar, loglik: ll, iterations: iters, converged: conv });

        let ret_window = returns.returns().rows(t - cfg.window, cfg.window).into_owned();
        let pw = PcaWindow { date, returns: ret_window, innovations: day.innovations.clone(), residuals: day.residuals.clone() };
        pca.get_or_insert_with(|| PcaDynamics::start(&pw.returns)).push(&pw);

        let realized: Vec<f64> = (0..n).map(|i| returns.returns()[(t, i)].exp_m1()).collect();
        let scen = &day.scenarios;
        strategies.par_iter_mut().try_for_each(|ledger| -> Result<(), BacktestError> {
            let alpha = ledger.alpha.expect("optimized strategies carry alpha");
            let prev = (!ledger.rows.is_empty()).then(|| ledger.current_weights());
            let ocfg = OptConfig { alpha, beta: cfg.beta, prev_weights: prev, turnover_cap: cfg.turnover_cap, lp_tol: cfg.lp_tol, route: Route::Auto };
            let res = optimize_portfolio(scen, &ocfg).map_err(|e| stage_err(date, format!("optimization at alpha {alpha}"))(Box::new(e)))?;
            ledger.record_trade(date, res.weights, &realized, cfg.cost_rate);
            Ok(())
        })?;
    }

    let oos = ReturnPanel::new(
        returns.dates()[rows.clone()].to_vec(),
        tickers.clone(),
        returns.returns().rows(rows.start, rows.len()).into_owned(),
    )?;
    let benchmark = ewbh_benchmark(&oos, cfg.cost_rate);
    Ok(BacktestRun {
        config: cfg.clone(),
        tickers,
        strategies,
        benchmark,
        models,
        nig,
        diagnostics,
        pca: pca.expect("at least one out-of-sample date"),
    })
}

fn records_csv<T: Serialize>(records: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("records are always serializable");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

/// Output file names written by [`BacktestRun::write_outputs`].
pub const OUTPUT_FILES: [&str; 7] = ["ledger.csv", "metrics.csv", "values.csv", "diagnostics.csv", "pca.csv", "models.csv", "nig.csv"];

impl BacktestRun {
    /// Strategies followed by the benchmark.
    pub fn all_ledgers(&self) -> Vec<BacktestLedger> {
        self.strategies.iter().cloned().chain(std::iter::once(self.benchmark.clone())).collect()
    }

    pub fn metrics(&self) -> Vec<MetricsReport> {
        self.all_ledgers().iter().map(MetricsReport::from_ledger).collect()
    }

    /// Writes every table into `dir`, each file atomically.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), BacktestError> {
        use crate::data::io::write_atomic;
        std::fs::create_dir_all(dir)?;
        let ledgers = self.all_ledgers();
        let diag = diagnostics_csv_string(&self.diagnostics).map_err(|e| BacktestError::InvalidConfig(e.to_string()))?;
        let texts = [
            ledgers_to_csv(&ledgers),
            metrics_csv_string(&self.metrics()),
            value_paths_csv_string(&ledgers),
            diag,
            self.pca.to_csv_string(),
            records_csv(&self.models),
            records_csv(&self.nig),
        ];
        for (name, text) in OUTPUT_FILES.iter().zip(texts) {
            write_atomic(&dir.join(name), text.as_bytes())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::synthetic::{generate_synthetic, SyntheticConfig};
    use crate::timeseries::ArmaGarchSpec;

    fn quick(window: usize, days: usize) -> BacktestConfig {
        BacktestConfig {
            window,
            n_scenarios: 500,
            alphas: vec![0.0, 0.75],
            max_order: 1,
            fixed_spec: Some(ArmaGarchSpec::new(1, 0, 1, 1).unwrap()),
            restarts: 1,
            max_days: Some(days),
            seed: 11,
            ..BacktestConfig::default()
        }
    }

    #[test]
    fn seeds_are_decorrelated() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(5, &[7]), derive_seed(5, &[7]));
    }

    #[test]
    fn single_asset_is_always_fully_invested() {
        let m = generate_synthetic(&SyntheticConfig::new(1, 140, 2)).unwrap();
        let run = run_backtest(&m.prices, None, &quick(120, 10)).unwrap();
        let r = compute_log_returns(&m.prices).unwrap();
        for l in &run.strategies {
            assert_eq!(l.rows.len(), 10);
            for (k, row) in l.rows.iter().enumerate() {
                assert!((row.weights_after[0] - 1.0).abs() < 1e-12);
                let asset = r.returns()[(120 + k, 0)].exp_m1();
                let entry = if k == 0 { 0.0002 * l.values()[0] } else { 0.0 };
                assert!((row.value - (l.values()[k] * (1.0 + asset) - entry)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factor_branch_leaves_filters_untouched() {
        let m = generate_synthetic(&SyntheticConfig::new(2, 130, 4)).unwrap();
        let mut runs = Vec::new();
        for kind in [FactorModelKind::None, FactorModelKind::Rlr, FactorModelKind::Gam] {
            let cfg = BacktestConfig { factor_model: kind, ..quick(120, 3) };
            runs.push(run_backtest(&m.prices, Some(&m.factors), &cfg).unwrap());
        }
        for r in &runs[1..] {
            let key = |x: &BacktestRun| x.models.iter().map(|m| (m.spec.clone(), m.loglik, m.bic)).collect::<Vec<_>>();
            assert_eq!(key(r), key(&runs[0]));
            assert_ne!(r.strategies[0].rows, runs[0].strategies[0].rows);
        }
        assert!(runs[0].diagnostics.is_empty());
        assert_eq!(runs[2].diagnostics.len(), 6);
    }

    #[test]
    fn turnover_cap_and_ledger_identity() {
        let m = generate_synthetic(&SyntheticConfig::new(3, 135, 5)).unwrap();
        let run = run_backtest(&m.prices, None, &quick(120, 15)).unwrap();
        for l in &run.strategies {
            let v = l.values();
            for (t, row) in l.rows.iter().enumerate() {
                assert!((row.value - (v[t] * (1.0 + row.gross_return) - row.cost)).abs() < 1e-14);
                assert!((row.weights_after.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                if t > 0 {
                    assert!(row.turnover <= 0.05 + 2e-9, "turnover {}", row.turnover);
                }
            }
        }
        assert_eq!(run.pca.rows.len(), 15);
        assert_eq!(run.benchmark.rows.len(), 15);
    }

    #[test]
    fn stage_failure_names_the_date() {
        let m = generate_synthetic(&SyntheticConfig::new(2, 130, 6)).unwrap();
        let mut p = m.prices.prices().clone();
        p.column_mut(1).fill(50.0);
        let flat = PricePanel::new(m.prices.dates().to_vec(), m.prices.tickers().to_vec(), p).unwrap();
        match run_backtest(&flat, None, &quick(120, 2)) {
            Err(e @ BacktestError::Stage { .. }) => {
                let msg = e.to_string();
                assert!(msg.contains(&m.prices.dates()[121].to_string()) && msg.contains("SYN1"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let m = generate_synthetic(&SyntheticConfig::new(2, 130, 6)).unwrap();
        let cfg = BacktestConfig { factor_model: FactorModelKind::Gam, ..quick(120, 2) };
        let err = run_backtest(&m.prices, None, &cfg).unwrap_err();
        assert!(matches!(err, BacktestError::InvalidConfig(_)));
        let short = BacktestConfig { window: 200, ..quick(120, 2) };
        assert!(matches!(run_backtest(&m.prices, None, &short), Err(BacktestError::InsufficientData { .. })));
    }

    #[test]
    fn outputs_are_written() {
        let m = generate_synthetic(&SyntheticConfig::new(2, 125, 8)).unwrap();
        let run = run_backtest(&m.prices, Some(&m.factors), &BacktestConfig { factor_model: FactorModelKind::Rlr, ..quick(120, 3) }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        run.write_outputs(dir.path()).unwrap();
        for f in OUTPUT_FILES {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let back = super::super::ledgers_from_csv(&std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap()).unwrap();
        assert_eq!(back, run.all_ledgers());
    }
}
