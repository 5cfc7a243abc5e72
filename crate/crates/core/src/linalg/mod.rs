//! Sparse and dense linear-algebra kernels.

pub mod dense;
pub mod sparse;
mod vector;

pub use dense::{generalized_symmetric_eigenvalues, spd_inverse, symmetric_eigenvalues, Cholesky, DenseMatrix, Lu};
pub use sparse::CsrMatrix;
pub use vector::{all_finite, axpy, dot, norm2, scale, sub};

use crate::error::Result;

/// A linear (or, for nonlinear preconditioners, merely deterministic) map
/// `x -> y` on vectors of length [`Operator::dim`].
pub trait Operator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;
}

impl Operator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.spmv(x, y);
        Ok(())
    }
}

impl Operator for Cholesky {
    fn dim(&self) -> usize {
        Cholesky::dim(self)
    }

    /// Applies the inverse of the factored matrix.
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        self.solve_in_place(y);
        Ok(())
    }
}

/// The identity map, e.g. an absent preconditioner.
#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator(pub usize);

impl Operator for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }
}

/// Wraps a closure as an [`Operator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Operator for FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (self.f)(x, y)
    }
}

/// Materializes an operator column by column.
pub fn assemble_dense(op: &dyn Operator) -> Result<DenseMatrix> {
    let n = op.dim();
    let mut cols = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut y = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut y)?;
        cols.row_mut(j).copy_from_slice(&y);
        e[j] = 0.0;
    }
    Ok(cols.transpose())
}
