use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{NigError, NigParams};
use crate::numeric::linalg::cholesky_with_jitter;

/// One inverse-Gaussian draw with mean `m` and shape `s` by the
/// Michael-Schucany-Haas transformation (one normal, one uniform).
fn inverse_gaussian<R: Rng + ?Sized>(m: f64, s: f64, rng: &mut R) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    let y = n * n;
    let my = m * y;
    let x = m + m * my / (2.0 * s) - m / (2.0 * s) * (4.0 * s * my + my * my).sqrt();
    let u: f64 = rng.random();
    if u <= m / (m + x) {
        x
    } else {
        m * m / x
    }
}

/// Draws from `GIG(-1/2, chi, psi)`, the inverse Gaussian law with mean
/// `sqrt(chi / psi)` and shape `chi`.
pub fn sample_gig(chi: f64, psi: f64, n: usize, seed: u64) -> Result<Vec<f64>, NigError> {
    if !(chi > 0.0 && psi > 0.0 && chi.is_finite() && psi.is_finite()) {
        return Err(NigError::InvalidParameter(format!("chi and psi must be positive, got {chi}, {psi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (chi / psi).sqrt();
    Ok((0..n).map(|_| inverse_gaussian(m, chi, &mut rng)).collect())
}

/// `n` draws (rows) of `X = mu + Z gamma + sqrt(Z) L W`.
pub fn sample_nig(params: &NigParams, n: usize, seed: u64) -> Result<DMatrix<f64>, NigError> {
    params.validate()?;
    let d = params.dim();
    let (chol, _) = cholesky_with_jitter(&params.sigma).ok_or(NigError::SingularDispersion)?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, d);
    let mut w = vec![0.0; d];
    for i in 0..n {
        let z = inverse_gaussian(1.0, params.alpha_bar, &mut rng);
        let sz = z.sqrt();
        for wj in w.iter_mut() {
            *wj = StandardNormal.sample(&mut rng);
        }
        for r in 0..d {
            let mut lw = 0.0;
            for c in 0..=r {
                lw += l[(r, c)] * w[c];
            }
            out[(i, r)] = params.mu[r] + z * params.gamma[r] + sz * lw;
        }
    }
    Ok(out)
}
