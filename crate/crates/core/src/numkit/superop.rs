use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, NumError};

/// Column-stacking vectorization: entry `(i, j)` goes to `i + j * d`.
pub fn vectorize(rho: &ComplexMatrix) -> Vec<C64> {
    let d = rho.rows();
    let mut v = vec![C64::new(0.0, 0.0); d * rho.cols()];
    for i in 0..d {
        for j in 0..rho.cols() {
            v[i + j * d] = rho[(i, j)];
        }
    }
    v
}

/// Inverse of [`vectorize`] for a `d x d` matrix.
///
/// *Panics* if `v.len() != d * d`.
pub fn unvectorize(v: &[C64], d: usize) -> ComplexMatrix {
    assert_eq!(v.len(), d * d, "vector length mismatch");
    ComplexMatrix::from_fn(d, d, |i, j| v[i + j * d])
}

/// Linear map on `d x d` matrices, as a `d^2 x d^2` matrix acting on
/// column-stacked vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, NumError> {
        let n = matrix.rows();
        let dim = (n as f64).sqrt().round() as usize;
        if !matrix.is_square() || dim * dim != n {
            return Err(NumError::DimensionMismatch { expected: dim * dim, found: n });
        }
        Ok(Self { dim, matrix })
    }

    /// Superoperator of `rho -> f(rho)`, probed on the matrix units `|i><j|`.
    pub fn from_map<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&ComplexMatrix) -> ComplexMatrix,
    {
        let n = dim * dim;
        let mut matrix = ComplexMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let mut unit = ComplexMatrix::zeros(dim, dim);
                unit[(i, j)] = C64::new(1.0, 0.0);
                let col = vectorize(&f(&unit));
                for (r, z) in col.into_iter().enumerate() {
                    matrix[(r, i + j * dim)] = z;
                }
            }
        }
        Self { dim, matrix }
    }

    /// `rho -> a rho b`, i.e. `b^T ⊗ a`.
    pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        Self { dim: a.rows(), matrix: b.transpose().kron(a) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: ComplexMatrix::identity(dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        unvectorize(&self.matrix.mul_vec(&vectorize(rho)), self.dim)
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        Self { dim: self.dim, matrix: self.matrix.matmul(&other.matrix) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sandwich_matches_direct_product() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64 + 1.0));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64, -1.0));
        let rho = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(1.0 / (1.0 + (i + j) as f64), i as f64));
        let s = Superoperator::sandwich(&a, &b);
        assert!(s.apply(&rho).max_abs_diff(&a.matmul(&rho).matmul(&b)) < 1e-13);
        let probed = Superoperator::from_map(3, |x| a.matmul(x).matmul(&b));
        assert!(probed.max_abs_diff(&s) < 1e-14);
    }

    #[test]
    fn vectorize_round_trips() {
        let rho = ComplexMatrix::from_fn(4, 4, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(unvectorize(&vectorize(&rho), 4), rho);
        assert_eq!(vectorize(&rho)[1], rho[(1, 0)]);
    }
}
