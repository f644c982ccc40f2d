use nalgebra::{DMatrix, DVector};

use super::bessel::{bessel_k_ratio, log_bessel_k};
use super::{NigError, NigEvaluator, NigParams, NIG_LAMBDA};
use crate::numeric::golden_section_min;
use crate::numeric::linalg::{cholesky_with_jitter, column_means, psd_rank, sample_covariance};

/// Posterior moments of the mixing variable given one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigMoments {
    /// `E[Z | x]`.
    pub e_z: f64,
    /// `E[1 / Z | x]`.
    pub e_inv: f64,
    /// `E[ln Z | x]`.
    pub e_log: f64,
}

/// Moments of `GIG(nu, chi, psi)`. `E[ln Z]` differentiates `ln K_nu` in
/// the order numerically.
pub fn gig_moments(nu: f64, chi: f64, psi: f64) -> Result<GigMoments, NigError> {
    let s = (chi * psi).sqrt();
    let ratio = bessel_k_ratio(nu, s)?;
    let e_z = (chi / psi).sqrt() * ratio;
    let e_inv = (psi / chi).sqrt() * ratio - 2.0 * nu / chi;
    let h = 1e-5;
    let dlog = (log_bessel_k(nu + h, s)? - log_bessel_k(nu - h, s)?) / (2.0 * h);
    Ok(GigMoments { e_z, e_inv, e_log: 0.5 * (chi / psi).ln() + dlog })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Relative log-likelihood change that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace {
    /// Log-likelihood at the initial guess, then after every iteration.
    pub loglik: Vec<f64>,
    pub snapshots: Vec<NigParams>,
    pub converged: bool,
    pub iterations: usize,
}

/// Bounds of the `alpha_bar` search.
const ALPHA_BAR_RANGE: (f64, f64) = (1e-3, 1e3);

/// Expected complete-data log-likelihood of the mixing variables as a
/// function of `alpha_bar` (terms free of `alpha_bar` dropped), given the
/// average of `E[Z] + E[1/Z]`.
fn mixing_objective(alpha_bar: f64, mean_sum: f64) -> f64 {
    let lk = log_bessel_k(NIG_LAMBDA, alpha_bar).unwrap_or(f64::NEG_INFINITY);
    -0.5 * alpha_bar * mean_sum - lk
}

/// EM estimation of a multivariate NIG law on the rows of `data`.
///
/// Starts from the sample mean, zero skewness, the sample covariance and
/// `alpha_bar = 1`. Each iteration computes the posterior mixing moments,
/// updates `(mu, gamma, sigma)` in closed form and `alpha_bar` by
/// golden-section search on its logarithm. Hitting `max_iter` returns the
/// last iterate with `converged = false`.
pub fn fit_nig_em(data: &DMatrix<f64>, opts: &EmOptions) -> Result<(NigParams, EmTrace), NigError> {
    let (n, d) = data.shape();
    if n <= d + 2 {
        return Err(NigError::RankDeficientData(format!("{n} rows for dimension {d}")));
    }
    let cov = sample_covariance(data);
    if psd_rank(&cov, 1e-12) < d {
        return Err(NigError::RankDeficientData("sample covariance is singular".into()));
    }
    let mut params = NigParams { alpha_bar: 1.0, mu: column_means(data), gamma: DVector::zeros(d), sigma: cov };
    let mut ll = NigEvaluator::new(&params)?.log_likelihood(data)?;
    let mut trace = EmTrace { loglik: vec![ll], snapshots: vec![params.clone()], converged: false, iterations: 0 };
    let nf = n as f64;
    let nu = NIG_LAMBDA - 0.5 * d as f64;
    let rows: Vec<DVector<f64>> = data.row_iter().map(|r| r.transpose()).collect();

    for it in 1..=opts.max_iter {
        // E-step
        let (chol, _) = cholesky_with_jitter(&params.sigma).ok_or(NigError::SingularDispersion)?;
        let sig_inv_gamma = chol.solve(&params.gamma);
        let b = params.alpha_bar + params.gamma.dot(&sig_inv_gamma);
        let mut delta = Vec::with_capacity(n);
        let mut eta = Vec::with_capacity(n);
        for x in &rows {
            let dx = x - &params.mu;
            let q = dx.dot(&chol.solve(&dx));
            let m = gig_moments(nu, params.alpha_bar + q, b)?;
            delta.push(m.e_inv);
            eta.push(m.e_z);
        }
        let delta_bar = delta.iter().sum::<f64>() / nf;
        let eta_bar = eta.iter().sum::<f64>() / nf;

        // M-step for mu, gamma, sigma
        let x_bar = column_means(data);
        let mut wx = DVector::zeros(d);
        let mut num = DVector::zeros(d);
        for (x, &dl) in rows.iter().zip(&delta) {
            wx += x * dl;
            num += (&x_bar - x) * dl;
        }
        wx /= nf;
        num /= nf;
        let gamma = num / (delta_bar * eta_bar - 1.0);
        let mu = (wx - &gamma) / delta_bar;
        let mut sigma = DMatrix::zeros(d, d);
        for (x, &dl) in rows.iter().zip(&delta) {
            let dx = x - &mu;
            sigma += &dx * dx.transpose() * dl;
        }
        sigma /= nf;
        sigma -= &gamma * gamma.transpose() * eta_bar;
        sigma = (&sigma + sigma.transpose()) * 0.5;

        // M-step for alpha_bar; keep the incumbent if the search lands lower
        let mean_sum = delta_bar + eta_bar;
        let (log_a, _) = golden_section_min(
            |t| -mixing_objective(t.exp(), mean_sum),
            ALPHA_BAR_RANGE.0.ln(),
            ALPHA_BAR_RANGE.1.ln(),
            1e-10,
        );
        let mut alpha_bar = log_a.exp();
        if mixing_objective(params.alpha_bar, mean_sum) > mixing_objective(alpha_bar, mean_sum) {
            alpha_bar = params.alpha_bar;
        }

        let (chol_new, ridge) = cholesky_with_jitter(&sigma).ok_or(NigError::SingularDispersion)?;
        drop(chol_new);
        if ridge > 0.0 {
            for i in 0..d {
                sigma[(i, i)] += ridge;
            }
        }
        let next = NigParams { alpha_bar, mu, gamma, sigma };
        let next_ll = NigEvaluator::new(&next)?.log_likelihood(data)?;
        trace.iterations = it;
        trace.loglik.push(next_ll);
        trace.snapshots.push(next.clone());
        let rel_change = (next_ll - ll).abs() / ll.abs().max(1e-300);
        params = next;
        ll = next_ll;
        if rel_change < opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nig::sample_nig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn posterior_moments_satisfy_jensen() {
        for &(chi, psi) in &[(0.5, 2.0), (3.0, 3.0), (10.0, 0.1)] {
            let m = gig_moments(-1.5, chi, psi).unwrap();
            assert!(m.e_z > 0.0 && m.e_inv > 0.0 && m.e_z * m.e_inv >= 1.0);
        }
    }

    #[test]
    fn inverse_gaussian_moments_closed_form() {
        // GIG(-1/2, a, a): mean 1, E[1/Z] = 1 + 1/a, E[ln Z] by quadrature
        let a = 2.5;
        let m = gig_moments(-0.5, a, a).unwrap();
        assert!((m.e_z - 1.0).abs() < 1e-12);
        assert!((m.e_inv - (1.0 + 1.0 / a)).abs() < 1e-12);
        let ig = |z: f64| (a / (2.0 * std::f64::consts::PI * z.powi(3))).sqrt() * (-a * (z - 1.0).powi(2) / (2.0 * z)).exp();
        let e_log = crate::numeric::integrate(|z| if z > 0.0 { ig(z) * z.ln() } else { 0.0 }, 0.0, 1.0, 1e-13)
            + crate::numeric::integrate_to_infinity(|z| ig(z) * z.ln(), 1.0, 1e-13);
        assert!((m.e_log - e_log).abs() < 1e-7);
    }

    #[test]
    fn alpha_bar_step_matches_stationary_point() {
        // d/da of the mixing objective vanishes at a = 1 / (mean_sum - 2)
        let mean_sum = 2.4;
        let (t, _) = golden_section_min(|t| -mixing_objective(t.exp(), mean_sum), (1e-3f64).ln(), (1e3f64).ln(), 1e-12);
        assert!((t.exp() - 1.0 / (mean_sum - 2.0)).abs() < 1e-5);
    }

    #[test]
    fn log_likelihood_non_decreasing() {
        let truth = NigParams::new(
            0.7,
            DVector::from_vec(vec![0.0, 0.1]),
            DVector::from_vec(vec![0.2, -0.3]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]),
        )
        .unwrap();
        let x = sample_nig(&truth, 800, 2).unwrap();
        let (_, trace) = fit_nig_em(&x, &EmOptions::default()).unwrap();
        for w in trace.loglik.windows(2) {
            assert!(w[1] >= w[0] - 1e-8 * w[0].abs(), "{w:?}");
        }
        assert!(trace.converged);
    }

    #[test]
    fn gaussian_data_pushes_toward_gaussian_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 5000;
        let x = DMatrix::from_fn(n, 2, |_, _| StandardNormal.sample(&mut rng));
        let (fit, trace) = fit_nig_em(&x, &EmOptions::default()).unwrap();
        assert!(fit.alpha_bar > 20.0, "alpha_bar {}", fit.alpha_bar);
        // Gaussian MLE log-likelihood
        let cov = sample_covariance(&x) * ((n - 1) as f64 / n as f64);
        let det = cov.determinant();
        let gauss = -0.5 * n as f64 * (2.0 * (2.0 * std::f64::consts::PI).ln() + det.ln() + 2.0);
        let ll = *trace.loglik.last().unwrap();
        assert!(((ll - gauss) / gauss).abs() < 0.005);
    }

    #[test]
    fn rank_deficient_rejected() {
        let x = DMatrix::from_fn(50, 2, |i, j| (i as f64) * (j as f64 + 1.0));
        assert!(matches!(fit_nig_em(&x, &EmOptions::default()), Err(NigError::RankDeficientData(_))));
        let x = DMatrix::from_fn(4, 2, |i, j| (i * j) as f64);
        assert!(fit_nig_em(&x, &EmOptions::default()).is_err());
    }

    #[test]
    fn max_iter_returns_flagged_iterate() {
        let truth = NigParams::new(0.5, DVector::zeros(1), DVector::from_vec(vec![0.5]), DMatrix::identity(1, 1)).unwrap();
        let x = sample_nig(&truth, 500, 8).unwrap();
        let (_, trace) = fit_nig_em(&x, &EmOptions { tol: 1e-15, max_iter: 3 }).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.iterations, 3);
        assert_eq!(trace.loglik.len(), 4);
    }
}
