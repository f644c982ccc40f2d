use super::{ArmaGarchFit, ArmaGarchParams, TimeseriesError};

const LN_2PI: f64 = 1.837_877_066_409_345_5; // ln(2 pi)

/// Pre-sample fill values for the recursions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Presample {
    pub mean: f64,
    pub variance: f64,
}

/// Runs the filter over `r`, returning the Gaussian log-likelihood and, if
/// requested, the residual and conditional-variance series.
pub(crate) fn run_filter(
    p: &ArmaGarchParams,
    r: &[f64],
    pre: Presample,
    mut series: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
) -> f64 {
    let mut r_lag = [pre.mean; 2];
    let mut e_lag = [0.0f64; 2];
    let mut s_lag = [pre.variance; 2];
    let mut ll = 0.0;
    for &rt in r {
        let mut mean = p.c1;
        for (j, a) in p.ar.iter().enumerate() {
            mean += a * r_lag[j];
        }
        for (j, b) in p.ma.iter().enumerate() {
            mean += b * e_lag[j];
        }
        let mut s2 = p.c2;
        for (j, g) in p.garch.iter().enumerate() {
            s2 += g * s_lag[j];
        }
        for (j, a) in p.arch.iter().enumerate() {
            s2 += a * e_lag[j] * e_lag[j];
        }
        if !(s2 > 0.0) || !s2.is_finite() {
            return f64::NEG_INFINITY;
        }
        let eps = rt - mean;
        ll -= 0.5 * (LN_2PI + s2.ln() + eps * eps / s2);
        if let Some((e_out, s_out)) = series.as_mut() {
            e_out.push(eps);
            s_out.push(s2);
        }
        r_lag = [rt, r_lag[0]];
        e_lag = [eps, e_lag[0]];
        s_lag = [s2, s_lag[0]];
    }
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

/// Lagged state at the end of the sample: the conditional mean excluding the
/// new shock and the next-step conditional variance.
fn next_step_moments(fit: &ArmaGarchFit) -> Result<(f64, f64), TimeseriesError> {
    let n = fit.returns.len();
    if n == 0 || fit.eps.len() != n || fit.sigma2.len() != n {
        return Err(TimeseriesError::MissingState);
    }
    let p = &fit.params;
    let lag = |v: &[f64], j: usize, fill: f64| if j < v.len() { v[v.len() - 1 - j] } else { fill };
    let mut mean = p.c1;
    for (j, a) in p.ar.iter().enumerate() {
        mean += a * lag(&fit.returns, j, fit.presample.mean);
    }
    for (j, b) in p.ma.iter().enumerate() {
        mean += b * lag(&fit.eps, j, 0.0);
    }
    let mut s2 = p.c2;
    for (j, g) in p.garch.iter().enumerate() {
        s2 += g * lag(&fit.sigma2, j, fit.presample.variance);
    }
    for (j, a) in p.arch.iter().enumerate() {
        let e = lag(&fit.eps, j, 0.0);
        s2 += a * e * e;
    }
    Ok((mean, s2))
}

/// Passes one simulated standardized innovation through the fitted filter:
/// `r = mean_{T+1} + sigma_{T+1} * h`.
pub fn forecast_one_step(fit: &ArmaGarchFit, h_sim: f64) -> Result<f64, TimeseriesError> {
    let (mean, s2) = next_step_moments(fit)?;
    Ok(mean + s2.sqrt() * h_sim)
}

/// Vectorized [`forecast_one_step`] over many innovations.
pub fn forecast_many(fit: &ArmaGarchFit, h_sim: &[f64]) -> Result<Vec<f64>, TimeseriesError> {
    let (mean, s2) = next_step_moments(fit)?;
    let sd = s2.sqrt();
    Ok(h_sim.iter().map(|h| mean + sd * h).collect())
}

/// Regenerates the in-sample returns from the standardized innovations by
/// running the recursions forward, as if each innovation were simulated.
pub fn reconstruct_returns(fit: &ArmaGarchFit) -> Vec<f64> {
    let p = &fit.params;
    let mut r_lag = [fit.presample.mean; 2];
    let mut e_lag = [0.0f64; 2];
    let mut s_lag = [fit.presample.variance; 2];
    let mut out = Vec::with_capacity(fit.h.len());
    for &h in &fit.h {
        let mut mean = p.c1;
        for (j, a) in p.ar.iter().enumerate() {
            mean += a * r_lag[j];
        }
        for (j, b) in p.ma.iter().enumerate() {
            mean += b * e_lag[j];
        }
        let mut s2 = p.c2;
        for (j, g) in p.garch.iter().enumerate() {
            s2 += g * s_lag[j];
        }
        for (j, a) in p.arch.iter().enumerate() {
            s2 += a * e_lag[j] * e_lag[j];
        }
        let eps = s2.sqrt() * h;
        let r = mean + eps;
        out.push(r);
        r_lag = [r, r_lag[0]];
        e_lag = [eps, e_lag[0]];
        s_lag = [s2, s_lag[0]];
    }
    out
}
