//! Pointwise smoothers for the pre- and post-smoothing steps.

use crate::error::{AsmgError, Result};
use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmootherKind {
    None,
    /// Forward sweeps for `M`, backward sweeps for `M^T`.
    GaussSeidel,
    DampedJacobi { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoother {
    pub kind: SmootherKind,
    pub sweeps: usize,
}

impl Smoother {
    pub fn gauss_seidel(sweeps: usize) -> Self {
        Self {
            kind: SmootherKind::GaussSeidel,
            sweeps,
        }
    }

    pub fn none() -> Self {
        Self {
            kind: SmootherKind::None,
            sweeps: 0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.sweeps > 0 && self.kind != SmootherKind::None
    }

    /// `m` sweeps with `M` on `A x = b`, starting from the given `x`.
    pub fn pre(&self, a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64]) -> Result<()> {
        self.run(a, diag, b, x, false)
    }

    /// `m` sweeps with `M^T`.
    pub fn post(&self, a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64]) -> Result<()> {
        self.run(a, diag, b, x, true)
    }

    fn run(&self, a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64], transposed: bool) -> Result<()> {
        if !self.is_active() {
            return Ok(());
        }
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(AsmgError::Internal(format!("zero diagonal entry at row {i}")));
        }
        for _ in 0..self.sweeps {
            match self.kind {
                SmootherKind::GaussSeidel if transposed => gauss_seidel_backward(a, diag, b, x),
                SmootherKind::GaussSeidel => gauss_seidel_forward(a, diag, b, x),
                SmootherKind::DampedJacobi { omega } => jacobi(a, diag, b, x, omega),
                SmootherKind::None => {}
            }
        }
        Ok(())
    }
}

fn relax_row(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64], i: usize) {
    let (cols, vals) = a.row(i);
    let mut s = b[i];
    for (&j, &v) in cols.iter().zip(vals) {
        if j != i {
            s -= v * x[j];
        }
    }
    x[i] = s / diag[i];
}

pub fn gauss_seidel_forward(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64]) {
    for i in 0..a.nrows() {
        relax_row(a, diag, b, x, i);
    }
}

pub fn gauss_seidel_backward(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64]) {
    for i in (0..a.nrows()).rev() {
        relax_row(a, diag, b, x, i);
    }
}

fn jacobi(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64], omega: f64) {
    let ax = a.mul_vec(x);
    for i in 0..x.len() {
        x[i] += omega * (b[i] - ax[i]) / diag[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientField;
    use crate::linalg::{symmetric_eigenvalues, Cholesky, DenseMatrix};
    use crate::mesh::{assemble_velocity, Grid};

    #[test]
    fn zero_sweeps_leave_x() {
        let a = CsrMatrix::identity(3);
        let mut x = vec![1.0, 2.0, 3.0];
        Smoother::gauss_seidel(0).pre(&a, &a.diagonal(), &[0.0; 3], &mut x).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn identity_solved_in_one_sweep() {
        let a = CsrMatrix::identity(4);
        let b = [1.0, -2.0, 3.0, 0.5];
        let mut x = vec![0.0; 4];
        Smoother::gauss_seidel(1).pre(&a, &a.diagonal(), &b, &mut x).unwrap();
        assert_eq!(x, b.to_vec());
    }

    /// Error propagation `E = (I - M^{-T} A)(I - M^{-1} A)` has A-norm below one.
    #[test]
    fn symmetrized_gauss_seidel_is_a_norm_convergent() {
        let g = Grid::new(8).unwrap();
        let a = assemble_velocity(&g, &CoefficientField::constant(8, 1.0)).unwrap();
        let n = a.nrows();
        let diag = a.diagonal();
        let sm = Smoother::gauss_seidel(1);
        let mut e = DenseMatrix::zeros(n, n);
        for j in 0..n {
            // column j of E: smoothing applied to the error e_j with zero rhs
            let mut x = vec![0.0; n];
            x[j] = 1.0;
            sm.pre(&a, &diag, &vec![0.0; n], &mut x).unwrap();
            sm.post(&a, &diag, &vec![0.0; n], &mut x).unwrap();
            for i in 0..n {
                e[(i, j)] = x[i];
            }
        }
        // ||E||_A = ||L^T E L^{-T}||_2 with A = L L^T
        let ad = a.to_dense();
        let chol = Cholesky::factor(&ad).unwrap();
        let l = chol.l();
        let lt_e = l.transpose().matmul(&e).unwrap();
        let linv_t = crate::linalg::spd_inverse(&ad).unwrap().matmul(&l).unwrap(); // A^{-1} L = L^{-T}
        let m = lt_e.matmul(&linv_t).unwrap();
        let ev = symmetric_eigenvalues(&m.transpose().matmul(&m).unwrap()).unwrap();
        let norm = ev.last().unwrap().sqrt();
        assert!(norm < 1.0, "{norm}");
    }
}
