//! Small dense SPD helpers on top of nalgebra's Cholesky.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{BanditError, Result};
use crate::scalar::Scalar;

/// Cholesky factor of an SPD matrix, used for `||a||_{M^{-1}}` and solves.
#[derive(Debug, Clone)]
pub struct SpdFactor<T: Scalar> {
    chol: Cholesky<T, Dyn>,
}

impl<T: Scalar> SpdFactor<T> {
    pub fn new(matrix: &DMatrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(BanditError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Cholesky::new(matrix.clone())
            .map(|chol| Self { chol })
            .ok_or(BanditError::SingularMatrix)
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// `sqrt(a^T M^{-1} a)` via a triangular solve.
    pub fn inverse_norm(&self, a: &DVector<T>) -> T {
        let l = self.chol.l();
        let y = l
            .solve_lower_triangular(a)
            .expect("Cholesky factor has a positive diagonal");
        y.norm()
    }

    pub fn solve(&self, rhs: &DVector<T>) -> DVector<T> {
        self.chol.solve(rhs)
    }
}

/// `||a||_{M^{-1}}` for SPD `M`, never forming the inverse.
pub fn mahalanobis_norm<T: Scalar>(a: &DVector<T>, m: &DMatrix<T>) -> Result<T> {
    if a.len() != m.nrows() {
        return Err(BanditError::DimensionMismatch {
            expected: m.nrows(),
            found: a.len(),
        });
    }
    Ok(SpdFactor::new(m)?.inverse_norm(a))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    m.clone().symmetric_eigenvalues().min()
}
