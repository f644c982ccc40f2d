//! Variance concentration of return, innovation and residual panels.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::numeric::linalg::sample_covariance;

/// Share of total variance needed to fix the component count.
pub const PCA_THRESHOLD: f64 = 0.9;

/// Eigenvalues of the sample covariance of the rows of `panel`, descending
/// and clipped at zero.
pub fn covariance_spectrum(panel: &DMatrix<f64>) -> Vec<f64> {
    let cov = sample_covariance(panel);
    let mut ev: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Fraction of total variance carried by the `k` largest eigenvalues.
/// A panel without variance reports 0.
pub fn explained_share(panel: &DMatrix<f64>, k: usize) -> f64 {
    let ev = covariance_spectrum(panel);
    let total: f64 = ev.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    ev.iter().take(k).sum::<f64>() / total
}

/// Smallest `k` whose cumulative share reaches `threshold`.
pub fn components_for(panel: &DMatrix<f64>, threshold: f64) -> usize {
    let ev = covariance_spectrum(panel);
    let total: f64 = ev.iter().sum();
    if total <= 0.0 {
        return ev.len();
    }
    let mut acc = 0.0;
    for (k, v) in ev.iter().enumerate() {
        acc += v;
        // tolerance absorbs rounding in exactly-on-threshold spectra
        if acc >= threshold * total * (1.0 - 1e-12) {
            return k + 1;
        }
    }
    ev.len()
}

/// The three panels observed in one estimation window.
#[derive(Debug, Clone)]
pub struct PcaWindow {
    pub date: NaiveDate,
    pub returns: DMatrix<f64>,
    pub innovations: DMatrix<f64>,
    pub residuals: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PcaRow {
    pub date: NaiveDate,
    pub returns: f64,
    pub innovations: f64,
    pub residuals: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaDynamics {
    pub k_fixed: usize,
    pub rows: Vec<PcaRow>,
}

impl PcaDynamics {
    /// Fixes `k` on the returns panel of `first`; rows are appended with
    /// [`PcaDynamics::push`].
    pub fn start(first: &DMatrix<f64>) -> Self {
        Self { k_fixed: components_for(first, PCA_THRESHOLD), rows: Vec::new() }
    }

    pub fn push(&mut self, w: &PcaWindow) {
        let k = self.k_fixed;
        self.rows.push(PcaRow {
            date: w.date,
            returns: explained_share(&w.returns, k),
            innovations: explained_share(&w.innovations, k),
            residuals: explained_share(&w.residuals, k),
        });
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,k_fixed,returns,innovations,residuals\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.date, self.k_fixed, r.returns, r.innovations, r.residuals));
        }
        out
    }
}

/// Top-`k` explained-variance shares over a sequence of windows, with `k`
/// fixed at 90% on the first returns window.
pub fn pca_explained_dynamics(windows: &[PcaWindow]) -> PcaDynamics {
    let Some(first) = windows.first() else { return PcaDynamics { k_fixed: 0, rows: Vec::new() } };
    let mut d = PcaDynamics::start(&first.returns);
    for w in windows {
        d.push(w);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng))
    }

    #[test]
    fn isotropic_spectrum() {
        // rows of +-e_i give an exactly isotropic sample covariance
        let d = 5;
        let m = DMatrix::from_fn(2 * d, d, |r, c| if r % d == c { if r < d { 1.0 } else { -1.0 } } else { 0.0 });
        assert!((explained_share(&m, 1) - 0.2).abs() < 1e-12);
        assert_eq!(components_for(&m, 0.9), (0.9 * d as f64).ceil() as usize);
    }

    #[test]
    fn rank_one_panel() {
        let z = noise(100, 1, 3);
        let m = DMatrix::from_fn(100, 4, |r, c| z[(r, 0)] * (c as f64 + 1.0));
        assert!((explained_share(&m, 1) - 1.0).abs() < 1e-12);
        assert_eq!(components_for(&m, 0.9), 1);
    }

    #[test]
    fn removing_a_common_factor_lowers_concentration() {
        let common = noise(500, 1, 1);
        let idio = noise(500, 6, 2);
        let innov = DMatrix::from_fn(500, 6, |r, c| 1.5 * common[(r, 0)] + idio[(r, c)]);
        let w = PcaWindow { date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), returns: innov.clone(), innovations: innov, residuals: idio };
        let d = pca_explained_dynamics(&[w]);
        assert!(d.rows[0].residuals <= d.rows[0].innovations);
    }
}
