//! Seeded synthetic markets with a planted factor structure.
//!
//! Every asset follows an AR(1)-GARCH(1,1) whose standardized innovation is
//! `h_t = g(F_{t-1}) + xi_t`. Each asset observes two factors made of a
//! market-wide persistent component plus asset-specific noise, so the
//! innovations share a common component that a factor model removes.

use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{DataError, FactorPanel, FactorSet, PricePanel};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_assets: usize,
    /// Number of log returns; prices have one more row.
    pub n_returns: usize,
    /// Per-asset drift of the mean equation.
    pub drifts: Vec<f64>,
    /// Target daily volatility.
    pub daily_vol: f64,
    /// `g` includes a quadratic term in the second factor when set;
    /// otherwise `g` is linear.
    pub nonlinear: bool,
    /// Share of innovation variance explained by `g`.
    pub factor_share: f64,
    /// Idiosyncratic noise added to the common factor paths.
    pub factor_noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(n_assets: usize, n_returns: usize, seed: u64) -> Self {
        Self {
            n_assets,
            n_returns,
            drifts: vec![0.0003; n_assets],
            daily_vol: 0.01,
            nonlinear: true,
            factor_share: 0.3,
            factor_noise: 0.3,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub prices: PricePanel,
    /// Raw factors aligned with the return dates.
    pub factors: FactorSet,
    /// True standardized innovations, returns x assets.
    pub innovations: DMatrix<f64>,
}

/// Weekdays from 2015-01-02 onward.
pub fn business_days(n: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2015, 1, 2).expect("valid date");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Planted link between lagged factors and the innovation, before scaling:
/// roughly unit variance for unit-variance inputs.
fn link(f1: f64, f2: f64, nonlinear: bool) -> f64 {
    if nonlinear {
        // tanh(1.5 f) and f^2 - 1 have variances of about 0.6 and 2
        0.9 * (1.5 * f1).tanh() + 0.5 * (f2 * f2 - 1.0)
    } else {
        0.7 * f1 + 0.7 * f2
    }
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticMarket, DataError> {
    let (n, t_n) = (cfg.n_assets, cfg.n_returns);
    if n == 0 || t_n < 2 || cfg.drifts.len() != n {
        return Err(DataError::MisalignedSeries("synthetic market needs assets, returns and one drift per asset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = || -> f64 { Distribution::<f64>::sample(&StandardNormal, &mut rng) };

    // common AR(1) factor paths with unit stationary variance, one extra leading row
    let phi: f64 = 0.95;
    let innov_sd = (1.0 - phi * phi).sqrt();
    let mut common = DMatrix::zeros(t_n + 1, 2);
    for k in 0..2 {
        common[(0, k)] = z();
        for t in 1..=t_n {
            common[(t, k)] = phi * common[(t - 1, k)] + innov_sd * z();
        }
    }
    let scale = 1.0 / (1.0 + cfg.factor_noise * cfg.factor_noise).sqrt();
    let raw: Vec<DMatrix<f64>> = (0..n)
        .map(|_| DMatrix::from_fn(t_n + 1, 2, |t, k| scale * (common[(t, k)] + cfg.factor_noise * z())))
        .collect();

    let g_sd = cfg.factor_share.clamp(0.0, 1.0).sqrt();
    let xi_sd = (1.0 - cfg.factor_share.clamp(0.0, 1.0)).sqrt();
    let (ar, garch, arch) = (0.05, 0.85, 0.1);
    let c2 = cfg.daily_vol * cfg.daily_vol * (1.0 - garch - arch);
    let mut innovations = DMatrix::zeros(t_n, n);
    let mut log_prices = DMatrix::zeros(t_n + 1, n);
    for i in 0..n {
        log_prices[(0, i)] = 100f64.ln();
        let mut r_prev = cfg.drifts[i] / (1.0 - ar);
        let (mut e_prev, mut s2_prev) = (0.0, cfg.daily_vol * cfg.daily_vol);
        for t in 0..t_n {
            // return row t pairs with factor row t - 1, i.e. raw row t
            let f = raw[i].row(t);
            let h = g_sd * link(f[0], f[1], cfg.nonlinear) + xi_sd * z();
            innovations[(t, i)] = h;
            let s2 = c2 + garch * s2_prev + arch * e_prev * e_prev;
            let e = s2.sqrt() * h;
            let r = cfg.drifts[i] + ar * r_prev + e;
            log_prices[(t + 1, i)] = log_prices[(t, i)] + r;
            (r_prev, e_prev, s2_prev) = (r, e, s2);
        }
    }

    let dates = business_days(t_n + 1);
    let tickers: Vec<String> = (0..n).map(|i| format!("SYN{i}")).collect();
    let prices = PricePanel::new(dates.clone(), tickers.clone(), log_prices.map(f64::exp))?;
    let ret_dates = dates[1..].to_vec();
    let panels = (0..n)
        .map(|i| {
            FactorPanel::new(tickers[i].clone(), ret_dates.clone(), vec!["f1".into(), "f2".into()], raw[i].rows(1, t_n).into_owned())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SyntheticMarket { prices, factors: FactorSet::new(panels)?, innovations })
}
