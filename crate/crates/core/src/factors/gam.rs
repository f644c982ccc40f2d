use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{active_columns, Diagnostics, FactorError, SplineBasis};

/// GCV grid: 13 log-spaced values from 1e-4 to 1e8.
pub fn gcv_grid() -> Vec<f64> {
    (-4..=8).map(|e| 10f64.powi(e)).collect()
}

/// Starting smoothing parameter of the coordinate-wise GCV sweep.
const GCV_START: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Lambdas {
    /// One value per factor column.
    Fixed(Vec<f64>),
    /// GCV over [`gcv_grid`], one coordinate-wise sweep.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GamFit {
    pub intercept: f64,
    /// Per-factor spline coefficients `z_k` in the original basis (length
    /// `q`); zero for constant factor columns.
    pub coefs: Vec<DVector<f64>>,
    pub lambdas: Vec<f64>,
    /// Effective degrees of freedom per smooth.
    pub edf: Vec<f64>,
    /// Trace of the smoother matrix, intercept included.
    pub total_edf: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Wald p-values per smooth (1 for constant columns).
    pub p_values: Vec<f64>,
    pub gcv: f64,
    pub diagnostics: Diagnostics,
    pub basis: SplineBasis,
}

impl GamFit {
    /// Centered smooth `f_k` at `x`, clamped into [0, 1].
    pub fn smooth(&self, k: usize, x: f64) -> f64 {
        let v = super::bspline_basis(x.clamp(0.0, 1.0), &self.basis).expect("clamped input");
        v.iter().zip(self.coefs[k].iter()).map(|(a, b)| a * b).sum()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + (0..self.coefs.len()).map(|k| self.smooth(k, row[k])).sum::<f64>()
    }
}

/// Orthonormal basis of the complement of `c`: columns 2..q of the
/// Householder reflector mapping `c` onto the first axis.
fn null_space_of(c: &DVector<f64>) -> DMatrix<f64> {
    let q = c.len();
    let norm = c.norm();
    let mut v = c.clone();
    v[0] += if c[0] >= 0.0 { norm } else { -norm };
    let h = DMatrix::identity(q, q) - (&v * v.transpose()) * (2.0 / v.norm_squared());
    h.columns(1, q - 1).into_owned()
}

/// Constrained design for the active smooths.
struct System {
    x: DMatrix<f64>,
    xtx: DMatrix<f64>,
    xth: DVector<f64>,
    /// Per active smooth: column offset, orthonormal map from the block
    /// coordinates to spline coefficients, diagonal penalty block.
    blocks: Vec<(usize, DMatrix<f64>, DMatrix<f64>)>,
}

struct Solution {
    beta: DVector<f64>,
    fitted: DVector<f64>,
    rss: f64,
    edf_diag: DVector<f64>,
    cov_unscaled: DMatrix<f64>,
}

impl System {
    fn build(f: &DMatrix<f64>, active: &[usize], basis: &SplineBasis, h: &[f64]) -> Result<Self, FactorError> {
        let n = f.nrows();
        let q = basis.q;
        let p = 1 + active.len() * (q - 1);
        let mut x = DMatrix::zeros(n, p);
        x.column_mut(0).fill(1.0);
        let d = basis.difference_matrix();
        let dtd = d.transpose() * d;
        let mut blocks = Vec::with_capacity(active.len());
        for (j, &k) in active.iter().enumerate() {
            let col: Vec<f64> = f.column(k).iter().copied().collect();
            let b = basis.design(&col)?;
            let c = DVector::from_iterator(q, b.column_iter().map(|col| col.sum()));
            // Rotating the complement onto the penalty eigenvectors makes the
            // penalty diagonal, so a large lambda inflates single diagonal
            // entries that the Jacobi scaling in `solve` then absorbs.
            let null = null_space_of(&c);
            let eig = SymmetricEigen::new(null.transpose() * &dtd * &null);
            let z = null * eig.eigenvectors;
            // the affine null space of D2 must stay exactly unpenalized
            let top = eig.eigenvalues.amax();
            let s = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| if e > 1e-10 * top { e } else { 0.0 }));
            let off = 1 + j * (q - 1);
            x.columns_mut(off, q - 1).copy_from(&(&b * &z));
            blocks.push((off, z, s));
        }
        let xtx = x.transpose() * &x;
        let xth = x.transpose() * DVector::from_column_slice(h);
        Ok(Self { x, xtx, xth, blocks })
    }

    fn solve(&self, lambdas: &[f64], h: &[f64]) -> Result<Solution, FactorError> {
        let mut a = self.xtx.clone();
        for ((off, _, s), &lam) in self.blocks.iter().zip(lambdas) {
            let m = s.nrows();
            let mut view = a.view_mut((*off, *off), (m, m));
            view += s * lam;
        }
        // symmetric Jacobi scaling: a = d s d with unit diagonal s
        let d = a.diagonal().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
        let p = a.nrows();
        let scaled = DMatrix::from_fn(p, p, |i, j| a[(i, j)] / (d[i] * d[j]));
        let chol = scaled.cholesky().ok_or(FactorError::SingularSystem)?;
        let beta = chol.solve(&self.xth.component_div(&d)).component_div(&d);
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(FactorError::SingularSystem);
        }
        let fitted = &self.x * &beta;
        let rss = fitted.iter().zip(h).map(|(f, y)| (y - f).powi(2)).sum();
        let inv = chol.inverse();
        let cov_unscaled = DMatrix::from_fn(p, p, |i, j| inv[(i, j)] / (d[i] * d[j]));
        let edf_diag = (&cov_unscaled * &self.xtx).diagonal();
        Ok(Solution { beta, fitted, rss, edf_diag, cov_unscaled })
    }
}

fn gcv_score(sol: &Solution, n: usize) -> f64 {
    let edf = sol.edf_diag.sum();
    let denom = n as f64 - edf;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    n as f64 * sol.rss / (denom * denom)
}

/// Penalized-spline additive model `h = a + sum_k f_k(F_k) + xi` with a
/// second-difference penalty on each smooth and the sum-to-zero constraint
/// over the training inputs absorbed into the basis. Exactly constant
/// factor columns contribute a zero smooth.
pub fn fit_gam(h: &[f64], f: &DMatrix<f64>, basis: &SplineBasis, lambdas: &Lambdas) -> Result<GamFit, FactorError> {
    let n = h.len();
    let k = f.ncols();
    let q = basis.q;
    if f.nrows() != n {
        return Err(FactorError::DimensionMismatch(format!("{n} innovations vs {} factor rows", f.nrows())));
    }
    if n <= k * q {
        return Err(FactorError::InsufficientRows { needed: k * q + 1, got: n });
    }
    if let Some(v) = f.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(FactorError::DomainViolation(*v));
    }
    let active = active_columns(f);
    let sys = System::build(f, &active, basis, h)?;

    let mut lam_active: Vec<f64> = match lambdas {
        Lambdas::Fixed(l) => {
            if l.len() != k {
                return Err(FactorError::DimensionMismatch(format!("{} lambdas for {k} factors", l.len())));
            }
            if let Some(bad) = l.iter().find(|v| !(**v > 0.0)) {
                return Err(FactorError::InvalidConfig(format!("lambda must be positive, got {bad}")));
            }
            active.iter().map(|&c| l[c]).collect()
        }
        Lambdas::Auto => vec![GCV_START; active.len()],
    };
    let mut sol = sys.solve(&lam_active, h)?;
    let mut gcv = gcv_score(&sol, n);
    if *lambdas == Lambdas::Auto {
        for j in 0..active.len() {
            for &cand in &gcv_grid() {
                if cand == lam_active[j] {
                    continue;
                }
                let mut trial = lam_active.clone();
                trial[j] = cand;
                let Ok(s) = sys.solve(&trial, h) else { continue };
                let score = gcv_score(&s, n);
                if score < gcv {
                    gcv = score;
                    lam_active = trial;
                    sol = s;
                }
            }
        }
    }

    let mut coefs = vec![DVector::zeros(q); k];
    let mut lam_all = match lambdas {
        Lambdas::Fixed(l) => l.clone(),
        Lambdas::Auto => vec![GCV_START; k],
    };
    let mut edf = vec![0.0; k];
    let mut p_values = vec![1.0; k];
    let total_edf = sol.edf_diag.sum();
    let sigma2 = sol.rss / (n as f64 - total_edf).max(1.0);
    for (j, &c) in active.iter().enumerate() {
        let (off, z, _) = &sys.blocks[j];
        let b = sol.beta.rows(*off, q - 1).into_owned();
        coefs[c] = z * &b;
        lam_all[c] = lam_active[j];
        edf[c] = sol.edf_diag.rows(*off, q - 1).sum();
        let v = sol.cov_unscaled.view((*off, *off), (q - 1, q - 1)) * sigma2;
        p_values[c] = wald_p_value(&b, &v.into_owned(), edf[c]);
    }
    let residuals: Vec<f64> = h.iter().zip(sol.fitted.iter()).map(|(y, f)| y - f).collect();
    let diagnostics = Diagnostics::compute(h, &residuals, total_edf);
    Ok(GamFit {
        intercept: sol.beta[0],
        coefs,
        lambdas: lam_all,
        edf,
        total_edf,
        fitted: sol.fitted.iter().copied().collect(),
        residuals,
        p_values,
        gcv,
        diagnostics,
        basis: basis.clone(),
    })
}

/// Wald test of `b = 0` using the leading `ceil(edf)` eigen-directions of
/// the Bayesian covariance `v`.
fn wald_p_value(b: &DVector<f64>, v: &DMatrix<f64>, edf: f64) -> f64 {
    let m = b.len();
    let rank = (edf.ceil() as usize).clamp(1, m);
    let eig = SymmetricEigen::new(v.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut stat = 0.0;
    for &i in order.iter().take(rank) {
        let e = eig.eigenvalues[i];
        if e <= 0.0 {
            continue;
        }
        let proj = eig.eigenvectors.column(i).dot(b);
        stat += proj * proj / e;
    }
    match ChiSquared::new(rank as f64) {
        Ok(chi) => 1.0 - chi.cdf(stat),
        Err(_) => 1.0,
    }
}
