//! Small dense kernels for the active-set blocks.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Pivots below `PIVOT_RTOL · max_i a_ii` are treated as zero.
pub const PIVOT_RTOL: f64 = 1e-13;

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    /// Factorizes a symmetric positive definite matrix, reading only its
    /// lower triangle.
    pub fn factor(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "cholesky (square)",
                expected: n,
                found: a.ncols(),
            });
        }
        let max_diag = (0..n).map(|i| a[[i, i]]).fold(0.0f64, f64::max);
        let tolerance = PIVOT_RTOL * max_diag;
        // Row-major storage: row prefixes `l[i, ..j]` are contiguous.
        let mut l = vec![0.0f64; n * n];
        for j in 0..n {
            let (done, rest) = l.split_at_mut((j + 1) * n);
            let row_j = &mut done[j * n..];
            let d = a[[j, j]] - dot(&row_j[..j], &row_j[..j]);
            if !(d > tolerance) {
                return Err(Error::SingularSystem {
                    pivot: d,
                    position: j,
                    tolerance,
                });
            }
            let ljj = d.sqrt();
            row_j[j] = ljj;
            let row_j = &row_j[..j];
            for (offset, row_i) in rest.chunks_exact_mut(n).enumerate() {
                let i = j + 1 + offset;
                row_i[j] = (a[[i, j]] - dot(&row_i[..j], row_j)) / ljj;
            }
        }
        let l = Array2::from_shape_vec((n, n), l).expect("square factor");
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_matrix(&self) -> &Array2<f64> {
        &self.l
    }

    /// Solves `A x = b` by forward and back substitution.
    pub fn solve(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "cholesky solve: rhs length");
        let l = self.l.as_slice().expect("standard layout");
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            y[i] = (y[i] - dot(row, &y[..i])) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        Array1::from(y)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix.
pub fn symmetric_eigen_range(a: &Array2<f64>) -> (f64, f64) {
    if a.is_empty() {
        return (0.0, 0.0);
    }
    let eig = to_nalgebra(a).symmetric_eigenvalues();
    (eig.min(), eig.max())
}

/// 2-norm condition number via singular values. Empty matrices have condition 1.
pub fn condition_number(a: &Array2<f64>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let s = to_nalgebra(a).singular_values();
    let (lo, hi) = (s.min(), s.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &Array2<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    to_nalgebra(a).singular_values().max()
}
