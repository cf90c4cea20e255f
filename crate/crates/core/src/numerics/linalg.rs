use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Lower-triangular Cholesky factor `A = L L'` of a symmetric positive
/// definite matrix, with the log-determinant of `A`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
    log_det: f64,
}

impl CholeskyFactor {
    /// Factorizes `a`, reading only its lower triangle.
    pub fn decompose(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidArgument("cholesky of a non-square matrix".into()));
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        let mut log_det = 0.0;
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            log_det += 2.0 * ljj.ln();
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { lower: l, log_det })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Solves `L x = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * b[k];
            }
            b[i] = s / self.lower[(i, i)];
        }
    }

    /// Solves `L' x = b` in place.
    pub fn backward_solve(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)] * b[k];
            }
            b[i] = s / self.lower[(i, i)];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.as_slice().to_vec();
        self.forward_solve(&mut x);
        self.backward_solve(&mut x);
        DVector::from_vec(x)
    }

    /// Squared Mahalanobis norm `r' A^{-1} r`.
    pub fn quad_form(&self, r: &[f64]) -> f64 {
        let mut z = r.to_vec();
        self.forward_solve(&mut z);
        z.iter().map(|v| v * v).sum()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = DMatrix::<f64>::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            self.forward_solve(&mut col);
            self.backward_solve(&mut col);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        // exact symmetry
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        inv
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }

    /// Log-density of `N(0, A)` at residual `r`.
    pub fn gaussian_logdensity(&self, r: &[f64]) -> f64 {
        -0.5 * (r.len() as f64 * LN_2PI + self.log_det + self.quad_form(r))
    }
}

/// Log-density of the multivariate normal `N(mu, v)` at `y`.
///
/// Fails with [`Error::NotPositiveDefinite`] when `v` cannot be factorized.
pub fn mvn_logdensity(y: &[f64], mu: &[f64], v: &DMatrix<f64>) -> Result<f64> {
    if y.len() != mu.len() || v.nrows() != y.len() {
        return Err(Error::InvalidArgument("dimension mismatch in mvn_logdensity".into()));
    }
    let chol = CholeskyFactor::decompose(v)?;
    let r: Vec<f64> = y.iter().zip(mu).map(|(a, b)| a - b).collect();
    Ok(chol.gaussian_logdensity(&r))
}

/// Returns true when the symmetric matrix is positive definite.
pub fn is_positive_definite(a: &DMatrix<f64>) -> bool {
    CholeskyFactor::decompose(a).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_mode() {
        let v = DMatrix::from_element(1, 1, 1.0);
        let l = mvn_logdensity(&[0.3], &[0.3], &v).unwrap();
        assert!((l + 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn diagonal_covariance_factorizes() {
        let v = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 0.25]));
        let y = [1.0, -2.0, 0.5];
        let mu = [0.0, 1.0, 0.0];
        let joint = mvn_logdensity(&y, &mu, &v).unwrap();
        let sum: f64 = (0..3)
            .map(|i| {
                let s2 = v[(i, i)];
                -0.5 * (LN_2PI + s2.ln() + (y[i] - mu[i]).powi(2) / s2)
            })
            .sum();
        assert!((joint - sum).abs() < 1e-13);
    }

    #[test]
    fn rejects_indefinite() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            mvn_logdensity(&[0.0, 0.0], &[0.0, 0.0], &v),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let c = CholeskyFactor::decompose(&a).unwrap();
        let prod = &a * c.inverse();
        assert!((prod - DMatrix::identity(3, 3)).abs().max() < 1e-14);
    }
}
