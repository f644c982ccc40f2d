//! Modified Bessel function of the second kind for real order and positive
//! argument, evaluated in log space.
//!
//! The order is split as `nu = mu + n` with `|mu| <= 1/2`. `K_mu` and
//! `K_{mu+1}` come from Temme's series for `x < 2` and from Steed's
//! continued fraction otherwise; forward recurrence in the ratio
//! `K_{m+1} / K_m` then reaches `nu` without overflow.

use std::f64::consts::PI;

use super::NigError;

const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 100_000;

/// Taylor coefficients of `1 / Gamma(1 + z)` about zero.
const RGAMMA: [f64; 22] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
];

/// `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))` for `|mu| <= 1/2`, where
/// `gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)` and
/// `gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2`, free of cancellation.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut even = 0.0;
    let mut odd_over_mu = 0.0;
    let mut pw = 1.0; // mu^(2j)
    for j in 0..RGAMMA.len() / 2 {
        even += RGAMMA[2 * j] * pw;
        odd_over_mu += RGAMMA[2 * j + 1] * pw;
        pw *= mu * mu;
    }
    let gampl = even + mu * odd_over_mu;
    let gammi = even - mu * odd_over_mu;
    (-odd_over_mu, even, gampl, gammi)
}

/// `(ln K_mu(x), K_{mu+1}(x) / K_mu(x))` for `|mu| <= 1/2`.
fn base_pair(mu: f64, x: f64) -> (f64, f64) {
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_TERMS {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu * mu);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum.ln(), sum1 * (2.0 / x) / sum)
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_TERMS {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let log_k = 0.5 * (PI / (2.0 * x)).ln() - x - s.ln();
        (log_k, (mu + x + 0.5 - h) / x)
    }
}

/// `(ln K_nu(x), K_{nu+1}(x) / K_nu(x))` for `nu >= 0`.
fn log_k_and_ratio(nu: f64, x: f64) -> (f64, f64) {
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut log_k, mut ratio) = base_pair(mu, x);
    for i in 1..=(n as usize) {
        log_k += ratio.ln();
        ratio = 2.0 * (mu + i as f64) / x + 1.0 / ratio;
    }
    (log_k, ratio)
}

/// `ln K_nu(x)`; symmetric in `nu`.
pub fn log_bessel_k(nu: f64, x: f64) -> Result<f64, NigError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(NigError::NonPositiveArgument(x));
    }
    Ok(log_k_and_ratio(nu.abs(), x).0)
}

/// `K_nu(x)`; underflows to zero for very large `x`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64, NigError> {
    log_bessel_k(nu, x).map(f64::exp)
}

/// `K_{nu+1}(x) / K_nu(x)` for any real `nu`.
pub fn bessel_k_ratio(nu: f64, x: f64) -> Result<f64, NigError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(NigError::NonPositiveArgument(x));
    }
    if nu >= 0.0 {
        Ok(log_k_and_ratio(nu, x).1)
    } else if nu >= -1.0 {
        // K_{nu+1} = K_{|nu+1|}, both orders within reach of the base pair
        Ok((log_k_and_ratio((nu + 1.0).abs(), x).0 - log_k_and_ratio(-nu, x).0).exp())
    } else {
        // K_{nu+1}/K_nu = K_{m-1}/K_m with m = -nu > 1: invert the ratio at m-1
        Ok(1.0 / log_k_and_ratio(-nu - 1.0, x).1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate_to_infinity;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn temme_gammas_match_gamma_function() {
        for &mu in &[-0.5, -0.3, -1e-3, 1e-6, 0.2, 0.5] {
            let (g1, g2, gp, gm) = temme_gammas(mu);
            let gp_ref = 1.0 / statrs::function::gamma::gamma(1.0 + mu);
            let gm_ref = 1.0 / statrs::function::gamma::gamma(1.0 - mu);
            assert!((gp - gp_ref).abs() < 1e-14 && (gm - gm_ref).abs() < 1e-14);
            assert!((g2 - 0.5 * (gm_ref + gp_ref)).abs() < 1e-14);
            if mu.abs() > 0.1 {
                assert!((g1 - (gm_ref - gp_ref) / (2.0 * mu)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn half_integer_closed_form() {
        for &x in &[0.1, 1.0, 1.999, 2.0, 10.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!(rel(bessel_k(0.5, x).unwrap(), exact) < 1e-13, "x={x}");
            assert!(rel(bessel_k(-0.5, x).unwrap(), exact) < 1e-13);
            // K_{3/2} = K_{1/2} (1 + 1/x)
            assert!(rel(bessel_k(1.5, x).unwrap(), exact * (1.0 + 1.0 / x)) < 1e-13);
        }
    }

    #[test]
    fn recurrence_identity() {
        for &nu in &[0.0, 0.3, 1.0, 2.7, 7.25, 20.0] {
            for &x in &[0.05, 0.9, 2.5, 30.0] {
                let km = bessel_k(nu - 1.0, x).unwrap();
                let k0 = bessel_k(nu, x).unwrap();
                let kp = bessel_k(nu + 1.0, x).unwrap();
                assert!(rel(kp, km + 2.0 * nu / x * k0) < 1e-10, "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn integral_representation() {
        for &(nu, x) in &[(2.0, 1.5), (0.0, 0.3), (1.3, 4.0), (0.5, 2.0)] {
            let quad = integrate_to_infinity(|t: f64| (-x * t.cosh()).exp() * (nu * t).cosh(), 0.0, 1e-13);
            assert!(rel(bessel_k(nu, x).unwrap(), quad) < 1e-10, "nu={nu} x={x}");
        }
    }

    #[test]
    fn ratio_matches_log_difference() {
        for &nu in &[-3.7, -1.5, -0.8, -0.5, 0.0, 0.4, 2.2] {
            for &x in &[0.2, 3.0, 40.0] {
                let direct = (log_bessel_k(nu + 1.0, x).unwrap() - log_bessel_k(nu, x).unwrap()).exp();
                assert!(rel(bessel_k_ratio(nu, x).unwrap(), direct) < 1e-12, "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn log_space_extremes() {
        let big = log_bessel_k(1.0, 1e4).unwrap();
        assert!(big.is_finite() && (big - (0.5 * (PI / 2e4).ln() - 1e4)).abs() < 1e-3);
        assert!(log_bessel_k(30.0, 1e-6).unwrap().is_finite());
        assert!(matches!(bessel_k(1.0, 0.0), Err(NigError::NonPositiveArgument(_))));
        assert!(matches!(bessel_k(1.0, -2.0), Err(NigError::NonPositiveArgument(_))));
    }
}
