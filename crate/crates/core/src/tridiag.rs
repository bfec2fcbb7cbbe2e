//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};
use crate::real::Real;

/// Tridiagonal matrix stored by diagonals; `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![T::zero(); n], diag: vec![T::zero(); n], upper: vec![T::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc = acc + self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc = acc + self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Solves `A x = rhs` without pivoting.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::Precondition("right-hand side length mismatch".into()));
        }
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut denom = self.diag[0];
        for i in 0..n {
            if i > 0 {
                denom = self.diag[i] - self.lower[i] * c[i - 1];
            }
            if denom == T::zero() || !denom.is_finite() {
                return Err(Error::NonConvergence { iterations: i, residual: f64::INFINITY });
            }
            c[i] = if i + 1 < n { self.upper[i] / denom } else { T::zero() };
            d[i] = if i > 0 { (rhs[i] - self.lower[i] * d[i - 1]) / denom } else { rhs[i] / denom };
        }
        let mut x = d;
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] = x[i] - c[i] * x[i + 1];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap()).unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn matches_dense_solver_on_diagonally_dominant_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 40] {
            let mut t = Tridiagonal::zeros(n);
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                if i > 0 {
                    t.lower[i] = rng.gen_range(-1.0..0.0);
                    dense[i][i - 1] = t.lower[i];
                }
                if i + 1 < n {
                    t.upper[i] = rng.gen_range(-1.0..0.0);
                    dense[i][i + 1] = t.upper[i];
                }
                t.diag[i] = 2.0 + rng.gen_range(0.0..1.0);
                dense[i][i] = t.diag[i];
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = t.solve(&b).unwrap();
            let y = dense_solve(dense, b.clone());
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-12);
            }
            let r = t.mul_vec(&x);
            for (a, c) in r.iter().zip(&b) {
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_pivot_is_reported() {
        let t = Tridiagonal { lower: vec![0.0, 1.0], diag: vec![0.0, 1.0], upper: vec![1.0, 0.0] };
        assert!(t.solve(&[1.0, 1.0]).is_err());
    }
}
