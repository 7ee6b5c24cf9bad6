//! Sparse, dense and low-rank matrix kernels, plus the small solvers used by
//! the thermal models.
//!
//! Matrix values are stored in single precision; every product accumulates
//! in double precision.

mod csr;
mod dense;
mod solve;
mod svd;

pub use csr::SparseCsr;
pub use dense::DenseBlock;
pub use solve::{fixed_point_solve, tridiag_solve, FixedPointReport};
pub use svd::{truncated_svd, LanczosSvd, TruncatedSvd};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("rank {k} out of range 1..{limit}")]
    RankOutOfRange { k: usize, limit: usize },
    #[error("truncated SVD did not converge within {applications} matrix applications")]
    NonConvergence { applications: usize },
    #[error("fixed-point iteration stopped after {iterations} iterations with relative step {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("zero pivot in row {row}")]
    ZeroPivot { row: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
}

/// A linear map `x -> A x` on double-precision vectors.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// Overwrites `y` with `A x`. Lengths must already match.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.ncols(),
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows()];
        self.apply_into(x, &mut y);
        Ok(y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
