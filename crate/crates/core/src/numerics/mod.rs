//! Dense and sparse symmetric matrices, Cholesky factorization and
//! eigenvalue bounds.

mod cholesky;
mod dense;
mod eigen;
mod kernels;
mod sparse;

pub use cholesky::{cholesky, inverse, is_positive_definite, log_det, CholeskyFactor, PIVOT_TOLERANCE};
pub use dense::SymmetricMatrix;
pub use eigen::{extreme_eigenvalues, ExtremeEigenvalues};
pub use kernels::{dot, sum_compensated};
pub(crate) use kernels::{axpy, dot4};
pub use sparse::SparseSymmetricMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("iteration did not converge after {iterations} steps")]
    NonConvergence { iterations: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("index ({row}, {col}) out of bounds for dimension {dim}")]
    IndexOutOfBounds { row: usize, col: usize, dim: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}
