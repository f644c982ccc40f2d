use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ArmaGarchSpec, TimeseriesError};

/// Coefficients of an ARMA-GARCH filter in their natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaGarchParams {
    pub spec: ArmaGarchSpec,
    pub c1: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub c2: f64,
    pub garch: Vec<f64>,
    pub arch: Vec<f64>,
}

impl ArmaGarchParams {
    /// Flattens as `[c1, ar.., ma.., c2, garch.., arch..]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.c1];
        v.extend(&self.ar);
        v.extend(&self.ma);
        v.push(self.c2);
        v.extend(&self.garch);
        v.extend(&self.arch);
        v
    }

    pub fn from_slice(spec: ArmaGarchSpec, v: &[f64]) -> Self {
        assert_eq!(v.len(), spec.n_params(), "parameter vector length");
        let mut it = v.iter().copied();
        let c1 = it.next().unwrap();
        let ar = (&mut it).take(spec.ar).collect();
        let ma = (&mut it).take(spec.ma).collect();
        let c2 = it.next().unwrap();
        let garch = (&mut it).take(spec.garch).collect();
        let arch = it.take(spec.arch).collect();
        Self { spec, c1, ar, ma, c2, garch, arch }
    }

    /// `sum(garch) + sum(arch)`.
    pub fn persistence(&self) -> f64 {
        self.garch.iter().sum::<f64>() + self.arch.iter().sum::<f64>()
    }

    /// Unconditional variance `c2 / (1 - persistence)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.c2 / (1.0 - self.persistence())
    }

    /// Checks positivity, covariance stationarity, and that the AR and MA
    /// lag polynomials have their roots outside the unit circle.
    pub fn is_admissible(&self) -> bool {
        self.c2 > 0.0
            && self.garch.iter().chain(&self.arch).all(|&c| c >= 0.0)
            && self.persistence() < 1.0
            && lag_roots_outside_unit_circle(&self.ar.iter().map(|a| -a).collect::<Vec<_>>())
            && lag_roots_outside_unit_circle(&self.ma)
    }
}

/// True when `1 + c[0] z + c[1] z^2` has no roots in the closed unit disk.
pub(crate) fn lag_roots_outside_unit_circle(c: &[f64]) -> bool {
    match c.len() {
        0 => true,
        1 => c[0].abs() < 1.0,
        2 => {
            // equivalently the AR(2) triangle for phi = -c
            let (p1, p2) = (-c[0], -c[1]);
            p2.abs() < 1.0 && p1 + p2 < 1.0 && p2 - p1 < 1.0
        }
        _ => unreachable!("orders are at most two"),
    }
}

/// Simulates `n` observations after discarding `burn_in` warm-up draws.
/// Returns the returns and the conditional variances.
pub fn simulate_arma_garch(
    params: &ArmaGarchParams,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), TimeseriesError> {
    if !params.is_admissible() {
        return Err(TimeseriesError::InvalidOrder(format!("inadmissible parameters for {}", params.spec)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ar_sum: f64 = params.ar.iter().sum();
    let mean0 = params.c1 / (1.0 - ar_sum);
    let var0 = params.unconditional_variance();
    let mut r_lag = [mean0; 2];
    let mut e_lag = [0.0f64; 2];
    let mut s_lag = [var0; 2];
    let mut returns = Vec::with_capacity(n);
    let mut vars = Vec::with_capacity(n);
    for t in 0..(n + burn_in) {
        let mut s2 = params.c2;
        for (j, g) in params.garch.iter().enumerate() {
            s2 += g * s_lag[j];
        }
        for (j, a) in params.arch.iter().enumerate() {
            s2 += a * e_lag[j] * e_lag[j];
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        let eps = s2.sqrt() * z;
        let mut r = params.c1 + eps;
        for (j, a) in params.ar.iter().enumerate() {
            r += a * r_lag[j];
        }
        for (j, b) in params.ma.iter().enumerate() {
            r += b * e_lag[j];
        }
        r_lag = [r, r_lag[0]];
        e_lag = [eps, e_lag[0]];
        s_lag = [s2, s_lag[0]];
        if t >= burn_in {
            returns.push(r);
            vars.push(s2);
        }
    }
    Ok((returns, vars))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_checks() {
        assert!(lag_roots_outside_unit_circle(&[0.5]));
        assert!(!lag_roots_outside_unit_circle(&[1.0]));
        // 1 - 0.5 z - 0.3 z^2 is stationary, 1 - 0.7 z - 0.4 z^2 is not
        assert!(lag_roots_outside_unit_circle(&[-0.5, -0.3]));
        assert!(!lag_roots_outside_unit_circle(&[-0.7, -0.4]));
    }

    #[test]
    fn simulated_variance_matches_unconditional() {
        let spec = ArmaGarchSpec::new(0, 0, 1, 1).unwrap();
        let p = ArmaGarchParams { spec, c1: 0.0, ar: vec![], ma: vec![], c2: 1e-5, garch: vec![0.8], arch: vec![0.1] };
        let (r, _) = simulate_arma_garch(&p, 200_000, 500, 3).unwrap();
        let v = crate::numeric::stats::variance(&r);
        assert!((v / 1e-4 - 1.0).abs() < 0.05, "{v}");
    }
}
