use nalgebra::DMatrix;

use super::FactorError;

/// B-spline basis on [0, 1] with uniform knots padded `degree` spacings
/// beyond both ends, so that every basis function has the same shape and
/// a second-difference penalty annihilates exactly the affine functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    pub degree: usize,
    pub n_interior_knots: usize,
    pub knots: Vec<f64>,
    /// Number of basis functions, `n_interior_knots + degree + 1`.
    pub q: usize,
}

impl SplineBasis {
    /// Uniform basis with `q` functions of the given degree (`q > degree`).
    pub fn uniform(q: usize, degree: usize) -> Result<Self, FactorError> {
        if q <= degree {
            return Err(FactorError::InvalidConfig(format!("need q > degree, got q={q}, degree={degree}")));
        }
        let intervals = q - degree;
        let step = 1.0 / intervals as f64;
        let knots = (0..q + degree + 1).map(|i| (i as f64 - degree as f64) * step).collect();
        Ok(Self { degree, n_interior_knots: intervals - 1, knots, q })
    }

    /// Cubic basis with ten functions.
    pub fn cubic_default() -> Self {
        Self::uniform(10, 3).expect("valid default basis")
    }

    /// Second-order difference matrix `D2`, `(q - 2) x q`.
    pub fn difference_matrix(&self) -> DMatrix<f64> {
        let q = self.q;
        let mut d = DMatrix::zeros(q.saturating_sub(2), q);
        for i in 0..q.saturating_sub(2) {
            d[(i, i)] = 1.0;
            d[(i, i + 1)] = -2.0;
            d[(i, i + 2)] = 1.0;
        }
        d
    }

    /// Evaluates all basis functions at each point, one row per point.
    pub fn design(&self, x: &[f64]) -> Result<DMatrix<f64>, FactorError> {
        let mut m = DMatrix::zeros(x.len(), self.q);
        for (i, &xi) in x.iter().enumerate() {
            let (first, vals) = self.nonzero(xi)?;
            for (j, v) in vals.into_iter().enumerate() {
                m[(i, first + j)] = v;
            }
        }
        Ok(m)
    }

    /// Index of the first nonzero function and the `degree + 1` values
    /// from the Cox-de Boor triangle.
    fn nonzero(&self, x: f64) -> Result<(usize, Vec<f64>), FactorError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(FactorError::OutOfDomain(x));
        }
        let p = self.degree;
        let t = &self.knots;
        // span s with t[s] <= x < t[s+1]; x = 1 belongs to the last span
        let intervals = self.q - p;
        let span = p + ((x * intervals as f64).floor() as usize).min(intervals - 1);
        let mut n = vec![0.0; p + 1];
        n[0] = 1.0;
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            n[j] = saved;
        }
        Ok((span - p, n))
    }
}

/// Values of the `q` basis functions at `x`.
pub fn bspline_basis(x: f64, basis: &SplineBasis) -> Result<Vec<f64>, FactorError> {
    let (first, vals) = basis.nonzero(x)?;
    let mut out = vec![0.0; basis.q];
    out[first..first + vals.len()].copy_from_slice(&vals);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct Cox-de Boor recursion, used as an oracle.
    fn cox_de_boor(t: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        if t[i + p] > t[i] {
            v += (x - t[i]) / (t[i + p] - t[i]) * cox_de_boor(t, i, p - 1, x);
        }
        if t[i + p + 1] > t[i + 1] {
            v += (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * cox_de_boor(t, i + 1, p - 1, x);
        }
        v
    }

    #[test]
    fn matches_recursive_definition() {
        let b = SplineBasis::cubic_default();
        for &x in &[0.0, 0.013, 0.25, 0.5, 0.77, 0.999] {
            let v = bspline_basis(x, &b).unwrap();
            for (i, vi) in v.iter().enumerate() {
                assert!((vi - cox_de_boor(&b.knots, i, 3, x)).abs() < 1e-14, "x={x} i={i}");
            }
        }
    }

    #[test]
    fn degree_zero_indicator() {
        let b = SplineBasis::uniform(4, 0).unwrap();
        assert_eq!(bspline_basis(0.5, &b).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(bspline_basis(1.0, &b).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn symmetric_at_center() {
        let b = SplineBasis::uniform(9, 3).unwrap();
        let v = bspline_basis(0.5, &b).unwrap();
        for i in 0..b.q {
            assert!((v[i] - v[b.q - 1 - i]).abs() < 1e-15);
        }
        assert_eq!(v.iter().filter(|x| **x > 0.0).count(), 3);
    }

    #[test]
    fn outside_domain_rejected() {
        assert!(matches!(bspline_basis(1.01, &SplineBasis::cubic_default()), Err(FactorError::OutOfDomain(_))));
    }

    #[test]
    fn second_differences_vanish_on_linear_coefficients() {
        // With uniform padded knots the Greville abscissae are equispaced,
        // so an affine function has affine coefficients.
        let b = SplineBasis::cubic_default();
        let coef: Vec<f64> = (0..b.q).map(|j| {
            let g: f64 = (1..=3).map(|k| b.knots[j + k]).sum::<f64>() / 3.0;
            2.0 * g - 0.5
        }).collect();
        for &x in &[0.0, 0.3, 0.8, 1.0] {
            let v = bspline_basis(x, &b).unwrap();
            let y: f64 = v.iter().zip(&coef).map(|(a, c)| a * c).sum();
            assert!((y - (2.0 * x - 0.5)).abs() < 1e-13);
        }
        let d = b.difference_matrix() * nalgebra::DVector::from_vec(coef);
        assert!(d.amax() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn partition_of_unity(x in 0.0f64..=1.0) {
            let b = SplineBasis::cubic_default();
            let v = bspline_basis(x, &b).unwrap();
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(v.iter().filter(|x| **x != 0.0).count() <= 4);
            prop_assert!(v.iter().all(|x| *x >= 0.0));
        }
    }
}
