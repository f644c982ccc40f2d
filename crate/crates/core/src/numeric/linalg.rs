use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Cholesky factorization that retries with a growing diagonal ridge
/// (`1e-10 * trace / n`, then x100 per retry) when the matrix is not
/// numerically positive definite. Returns the factor and the ridge used.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some((c, 0.0));
    }
    let n = m.nrows().max(1);
    let base = (m.trace().abs() / n as f64).max(f64::MIN_POSITIVE);
    let mut ridge = 1e-10 * base;
    for _ in 0..6 {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += ridge;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Some((c, ridge));
        }
        ridge *= 100.0;
    }
    None
}

/// Sample covariance (divisor `n - 1`) of the rows of `x`.
pub fn sample_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let means = column_means(x);
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means.transpose();
    }
    (centered.transpose() * &centered) / ((n.max(2) - 1) as f64)
}

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Numerical rank of a symmetric positive semidefinite matrix.
pub fn psd_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    eig.eigenvalues.iter().filter(|&&e| e > rel_tol * max).count()
}
