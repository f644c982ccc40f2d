//! Performance and risk metrics on out-of-sample return and value series.

use serde::Serialize;

use crate::numeric::stats;

/// Minimum sample size for the reward-to-risk ratios.
pub const MIN_RATIO_OBS: usize = 30;

/// Lower and upper empirical CVaR of a return sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalCvar {
    /// Mean of the worst `(1 - beta)` fraction of returns.
    pub lower: f64,
    /// Mean of the best `(1 - beta)` fraction of returns.
    pub upper: f64,
    /// Set when the tail holds less than one observation; both values then
    /// fall back to the extreme order statistics.
    pub tail_empty: bool,
}

/// Tail mass in observations, snapped to an integer when within rounding
/// noise of one so that e.g. `(1 - 0.95) * 100` is exactly 5.
fn tail_mass(n: usize, beta: f64) -> f64 {
    let m = (1.0 - beta) * n as f64;
    if (m - m.round()).abs() < 1e-9 {
        m.round()
    } else {
        m
    }
}

/// Equal-mass tail average of ascending `sorted` over its first `m`
/// observations, weighting the boundary observation by the fractional part.
fn tail_average(sorted: impl Iterator<Item = f64>, m: f64) -> f64 {
    let whole = m.floor() as usize;
    let frac = m - whole as f64;
    let mut sum = 0.0;
    for (i, x) in sorted.enumerate() {
        if i < whole {
            sum += x;
        } else {
            sum += frac * x;
            break;
        }
    }
    sum / m
}

/// Lower/upper CVaR at level `beta` with tail mass `1 - beta`.
pub fn cvar_empirical(returns: &[f64], beta: f64) -> EmpiricalCvar {
    let n = returns.len();
    if n == 0 {
        return EmpiricalCvar { lower: f64::NAN, upper: f64::NAN, tail_empty: true };
    }
    let mut sorted = returns.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = tail_mass(n, beta);
    if m < 1.0 {
        return EmpiricalCvar { lower: sorted[0], upper: sorted[n - 1], tail_empty: true };
    }
    EmpiricalCvar {
        lower: tail_average(sorted.iter().copied(), m),
        upper: tail_average(sorted.iter().rev().copied(), m),
        tail_empty: false,
    }
}

/// Largest peak-to-trough loss of a value path, in percent.
pub fn max_drawdown(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in values {
        peak = peak.max(v);
        worst = worst.max((peak - v) / peak);
    }
    100.0 * worst
}

/// Gini mean difference `2/(n(n-1)) * sum_{i<j} |x_i - x_j|`.
pub fn gini_mean_difference(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let lo = s[0];
    let pair_sum: f64 = s.iter().enumerate().map(|(i, v)| (2.0 * i as f64 + 1.0 - n as f64) * (v - lo)).sum();
    2.0 * pair_sum / (n as f64 * (n as f64 - 1.0))
}

/// Root mean square of the negative part of `x - target` over all points.
pub fn lower_partial_deviation(x: &[f64], target: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| (v - target).min(0.0).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Reward-to-risk ratios. `None` marks an undefined ratio (zero or
/// non-finite denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RrRatios {
    pub ir: Option<f64>,
    pub sortino: Option<f64>,
    pub starr: Option<f64>,
    pub rachev: Option<f64>,
    pub gini: Option<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den.is_finite() && den > 0.0 && num.is_finite()).then(|| num / den)
}

/// IR, Sortino (target 0), STARR and Rachev at `beta_tail`, Gini ratio.
/// Every ratio is undefined below [`MIN_RATIO_OBS`] observations.
pub fn rr_ratios(returns: &[f64], beta_tail: f64) -> RrRatios {
    if returns.len() < MIN_RATIO_OBS {
        return RrRatios { ir: None, sortino: None, starr: None, rachev: None, gini: None };
    }
    let mean = stats::mean(returns);
    let cvar = cvar_empirical(returns, beta_tail);
    let lower_mag = cvar.lower.abs();
    RrRatios {
        ir: ratio(mean, stats::std_dev(returns)),
        sortino: ratio(mean, lower_partial_deviation(returns, 0.0)),
        starr: if cvar.tail_empty { None } else { ratio(mean, lower_mag) },
        rachev: if cvar.tail_empty { None } else { ratio(cvar.upper, lower_mag) },
        gini: ratio(mean, gini_mean_difference(returns)),
    }
}

/// `(final / initial)^(252 / days) - 1`, in percent.
pub fn annualized_return_pct(initial: f64, final_value: f64, days: usize) -> f64 {
    100.0 * ((final_value / initial).powf(252.0 / days as f64) - 1.0)
}
