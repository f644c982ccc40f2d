use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::filter::{run_filter, Presample};
use super::{ArmaGarchParams, ArmaGarchSpec, TimeseriesError};
use crate::numeric::{nelder_mead, stats, NelderMeadOptions};

pub const MIN_OBSERVATIONS: usize = 50;

/// Schwarz criterion `k ln(n) - 2 loglik`.
pub fn bic(loglik: f64, k: usize, n: usize) -> f64 {
    k as f64 * (n as f64).ln() - 2.0 * loglik
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Number of Nelder-Mead runs. The first starts from moment-based
    /// values, later ones from the incumbent plus a Gaussian jitter; the
    /// sequence stops early after two runs without improvement.
    pub restarts: usize,
    pub nelder_mead: NelderMeadOptions,
    /// Seed of the jitter stream.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            nelder_mead: NelderMeadOptions { ftol: 1e-8, max_evals: 4000, initial_step: 0.3 },
            seed: 0x5eed,
        }
    }
}

/// A fitted filter together with the in-sample series needed to forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaGarchFit {
    pub spec: ArmaGarchSpec,
    pub params: ArmaGarchParams,
    pub returns: Vec<f64>,
    pub eps: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Standardized innovations `eps / sigma`.
    pub h: Vec<f64>,
    pub loglik: f64,
    pub bic: f64,
    pub n_obs: usize,
    pub(crate) presample: Presample,
    pub converged: bool,
}

impl ArmaGarchFit {
    /// Builds a fit record for fixed coefficients by running the filter.
    pub fn from_params(params: ArmaGarchParams, returns: &[f64]) -> Result<Self, TimeseriesError> {
        validate(returns)?;
        let presample = presample_of(returns);
        Self::evaluate(params, returns, presample, true)
    }

    fn evaluate(
        params: ArmaGarchParams,
        returns: &[f64],
        presample: Presample,
        converged: bool,
    ) -> Result<Self, TimeseriesError> {
        let n = returns.len();
        let mut eps = Vec::with_capacity(n);
        let mut sigma2 = Vec::with_capacity(n);
        let loglik = run_filter(&params, returns, presample, Some((&mut eps, &mut sigma2)));
        if !loglik.is_finite() || eps.len() != n {
            return Err(TimeseriesError::OptimizerDiverged(params.spec));
        }
        let h = eps.iter().zip(&sigma2).map(|(e, s)| e / s.sqrt()).collect();
        let spec = params.spec;
        Ok(Self {
            spec,
            bic: bic(loglik, spec.n_params(), n),
            params,
            returns: returns.to_vec(),
            eps,
            sigma2,
            h,
            loglik,
            n_obs: n,
            presample,
            converged,
        })
    }

    /// Log-likelihood of these data under arbitrary coefficients of the same
    /// spec, with this fit's initialization.
    pub fn loglik_at(&self, params: &ArmaGarchParams) -> f64 {
        run_filter(params, &self.returns, self.presample, None)
    }

    /// Asymptotic standard errors from the inverse of the negative numerical
    /// Hessian of the log-likelihood, in `ArmaGarchParams::to_vec` order.
    /// `None` when the Hessian is not negative definite.
    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        let theta = self.params.to_vec();
        let k = theta.len();
        let spec = self.spec;
        let ll = |v: &[f64]| self.loglik_at(&ArmaGarchParams::from_slice(spec, v));
        let steps: Vec<f64> = theta
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let floor = if i == 0 { stats::std_dev(&self.returns) * 1e-2 } else { 1e-3 };
                1e-4 * t.abs().max(floor)
            })
            .collect();
        let mut hess = DMatrix::zeros(k, k);
        let f0 = ll(&theta);
        for i in 0..k {
            for j in i..k {
                let mut x = theta.clone();
                let v = if i == j {
                    x[i] = theta[i] + steps[i];
                    let fp = ll(&x);
                    x[i] = theta[i] - steps[i];
                    let fm = ll(&x);
                    (fp - 2.0 * f0 + fm) / (steps[i] * steps[i])
                } else {
                    let mut eval = |di: f64, dj: f64| {
                        x[i] = theta[i] + di * steps[i];
                        x[j] = theta[j] + dj * steps[j];
                        ll(&x)
                    };
                    (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                        / (4.0 * steps[i] * steps[j])
                };
                hess[(i, j)] = -v;
                hess[(j, i)] = -v;
            }
        }
        let cov = hess.cholesky()?.inverse();
        Some((0..k).map(|i| cov[(i, i)].sqrt()).collect())
    }
}

fn validate(returns: &[f64]) -> Result<(), TimeseriesError> {
    if returns.len() < MIN_OBSERVATIONS {
        return Err(TimeseriesError::InsufficientData { needed: MIN_OBSERVATIONS, got: returns.len() });
    }
    let first = returns[0];
    if returns.iter().all(|&r| r == first) || !(stats::variance(returns) > 0.0) {
        return Err(TimeseriesError::ConstantSeries);
    }
    Ok(())
}

fn presample_of(returns: &[f64]) -> Presample {
    Presample { mean: stats::mean(returns), variance: stats::variance(returns) }
}

// ---- reparametrization -------------------------------------------------

/// Maps partial autocorrelations in (-1, 1) to stationary AR coefficients.
fn pacf_to_ar(pacf: &[f64]) -> Vec<f64> {
    match pacf {
        [] => vec![],
        [r1] => vec![*r1],
        [r1, r2] => vec![r1 * (1.0 - r2), *r2],
        _ => unreachable!(),
    }
}

fn ar_to_pacf(ar: &[f64]) -> Vec<f64> {
    match ar {
        [] => vec![],
        [a1] => vec![*a1],
        [a1, a2] => vec![a1 / (1.0 - a2), *a2],
        _ => unreachable!(),
    }
}

/// Unconstrained coordinates for one spec: `c1` is measured in units of
/// the sample standard deviation around its start value and `c2` on a log
/// scale relative to the sample variance.
struct Transform {
    spec: ArmaGarchSpec,
    c1_center: f64,
    scale: f64,
    variance: f64,
}

impl Transform {
    fn to_params(&self, u: &[f64]) -> ArmaGarchParams {
        let s = self.spec;
        let mut i = 0;
        let c1 = self.c1_center + self.scale * u[i];
        i += 1;
        let ar = pacf_to_ar(&u[i..i + s.ar].iter().map(|x| x.tanh()).collect::<Vec<_>>());
        i += s.ar;
        let ma: Vec<f64> = pacf_to_ar(&u[i..i + s.ma].iter().map(|x| x.tanh()).collect::<Vec<_>>())
            .into_iter()
            .map(|c| -c)
            .collect();
        i += s.ma;
        let c2 = self.variance * u[i].exp();
        i += 1;
        let m = s.garch + s.arch;
        let exps: Vec<f64> = u[i..i + m].iter().map(|x| x.exp()).collect();
        let denom = 1.0 + exps.iter().sum::<f64>();
        let shares: Vec<f64> = exps.iter().map(|e| e / denom).collect();
        ArmaGarchParams {
            spec: s,
            c1,
            ar,
            ma,
            c2,
            garch: shares[..s.garch].to_vec(),
            arch: shares[s.garch..].to_vec(),
        }
    }

    fn to_unconstrained(&self, p: &ArmaGarchParams) -> Vec<f64> {
        let clip = |x: f64| x.clamp(-0.98, 0.98).atanh();
        let mut u = vec![(p.c1 - self.c1_center) / self.scale];
        u.extend(ar_to_pacf(&p.ar).into_iter().map(clip));
        let neg_ma: Vec<f64> = p.ma.iter().map(|c| -c).collect();
        u.extend(ar_to_pacf(&neg_ma).into_iter().map(clip));
        u.push((p.c2 / self.variance).ln());
        let shares: Vec<f64> = p.garch.iter().chain(&p.arch).map(|v| v.max(1e-4)).collect();
        let rest = (1.0 - shares.iter().sum::<f64>()).max(1e-4);
        u.extend(shares.iter().map(|v| (v / rest).ln()));
        u
    }
}

fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let m = stats::mean(x);
    let den: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let num: f64 = x.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn moment_start(spec: ArmaGarchSpec, r: &[f64]) -> ArmaGarchParams {
    let mean = stats::mean(r);
    let var = stats::variance(r);
    let ar = match spec.ar {
        0 => vec![],
        1 => vec![autocorrelation(r, 1).clamp(-0.9, 0.9)],
        _ => {
            let (r1, r2) = (autocorrelation(r, 1), autocorrelation(r, 2));
            let a2 = ((r2 - r1 * r1) / (1.0 - r1 * r1)).clamp(-0.9, 0.9);
            let a1 = (r1 * (1.0 - a2)).clamp(-0.9, 0.9);
            pacf_to_ar(&ar_to_pacf(&[a1, a2]).iter().map(|p| p.clamp(-0.9, 0.9)).collect::<Vec<_>>())
        }
    };
    let split = |total: f64, order: usize| match order {
        0 => vec![],
        1 => vec![total],
        _ => vec![total * 2.0 / 3.0, total / 3.0],
    };
    let (g_tot, a_tot) = match (spec.garch, spec.arch) {
        (0, 0) => (0.0, 0.0),
        (_, 0) => (0.5, 0.0),
        (0, _) => (0.0, 0.3),
        _ => (0.85, 0.1),
    };
    let garch = split(g_tot, spec.garch);
    let arch = split(a_tot, spec.arch);
    ArmaGarchParams {
        spec,
        c1: mean * (1.0 - ar.iter().sum::<f64>()),
        ar,
        ma: vec![0.0; spec.ma],
        c2: var * (1.0 - g_tot - a_tot),
        garch,
        arch,
    }
}

/// Gaussian quasi-maximum-likelihood fit of one specification.
pub fn fit_arma_garch(
    returns: &[f64],
    spec: ArmaGarchSpec,
    opts: &FitOptions,
) -> Result<ArmaGarchFit, TimeseriesError> {
    validate(returns)?;
    let presample = presample_of(returns);
    let n = returns.len() as f64;
    let start = moment_start(spec, returns);
    let tf = Transform {
        spec,
        c1_center: start.c1,
        scale: presample.variance.sqrt(),
        variance: presample.variance,
    };
    let objective = |u: &[f64]| {
        let p = tf.to_params(u);
        -run_filter(&p, returns, presample, None) / n
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ spec_hash(spec));
    let jitter = Normal::new(0.0, 0.3).expect("valid normal");
    let mut best_u = tf.to_unconstrained(&start);
    let mut best_f = objective(&best_u);
    let mut converged = false;
    let mut stale = 0;
    for run in 0..opts.restarts.max(1) {
        let x0: Vec<f64> = if run == 0 {
            best_u.clone()
        } else {
            best_u.iter().map(|u| u + jitter.sample(&mut rng)).collect()
        };
        let res = nelder_mead(objective, &x0, &opts.nelder_mead);
        if res.fx < best_f - 1e-10 {
            best_f = res.fx;
            best_u = res.x;
            converged = res.converged;
            stale = 0;
        } else {
            converged |= res.converged && res.fx <= best_f + opts.nelder_mead.ftol;
            stale += 1;
            if stale >= 2 {
                break;
            }
        }
    }
    if !best_f.is_finite() {
        return Err(TimeseriesError::OptimizerDiverged(spec));
    }
    let params = tf.to_params(&best_u);
    if !params.is_admissible() {
        return Err(TimeseriesError::OptimizerDiverged(spec));
    }
    ArmaGarchFit::evaluate(params, returns, presample, converged)
}

fn spec_hash(s: ArmaGarchSpec) -> u64 {
    ((s.ar * 27 + s.ma * 9 + s.garch * 3 + s.arch) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
