//! Incomplete factorization with exact local factorizations (ILUE).
//!
//! Given `D = sum_i R_i^T D_i R_i` and exact local factorizations
//! `D_i = L_i U_i` with unit lower `L_i`, the preconditioner is
//! `B = L U`, `U = sum_i R_i^T U_i R_i`, `L = U^T diag(U)^{-1}`.
//! Local index sets must be sorted so every `R_i^T U_i R_i` stays upper triangular.

use crate::error::{AsmgError, Result};
use crate::linalg::{Cholesky, CsrMatrix, DenseMatrix, Operator};

#[derive(Debug, Clone)]
pub struct Ilue {
    /// Upper-triangular factor, diagonal included.
    u: CsrMatrix,
    diag: Vec<f64>,
}

fn check_sorted(dofs: &[usize], n: usize, i: usize) -> Result<()> {
    if dofs.windows(2).any(|w| w[0] >= w[1]) || dofs.last().is_some_and(|&d| d >= n) {
        return Err(AsmgError::Internal(format!(
            "local index set {i} must be strictly increasing and below {n}"
        )));
    }
    Ok(())
}

impl Ilue {
    fn from_upper_triplets(n: usize, t: &[(usize, usize, f64)]) -> Result<Self> {
        let u = CsrMatrix::from_triplets(n, n, t)?;
        let diag = u.diagonal();
        if let Some(p) = diag.iter().position(|&d| d == 0.0) {
            return Err(AsmgError::Factorization {
                pivot: p,
                value: 0.0,
                context: " in assembled ILUE factor (index not covered by any subdomain)".into(),
            });
        }
        Ok(Self { u, diag })
    }

    /// Builds the factor from local Cholesky factors `D_i = C_i C_i^T`, for which
    /// `U_i = diag(C_i) C_i^T`.
    pub fn from_cholesky_pieces(n: usize, pieces: &[(&[usize], &Cholesky)]) -> Result<Self> {
        let mut t = Vec::new();
        for (i, (dofs, chol)) in pieces.iter().enumerate() {
            check_sorted(dofs, n, i)?;
            for p in 0..dofs.len() {
                let lpp = chol.l_entry(p, p);
                for q in p..dofs.len() {
                    t.push((dofs[p], dofs[q], lpp * chol.l_entry(q, p)));
                }
            }
        }
        Self::from_upper_triplets(n, &t)
    }

    /// Builds the factor from local matrices by LU factorization without pivoting.
    pub fn from_local_pieces(n: usize, pieces: &[(&[usize], &DenseMatrix)]) -> Result<Self> {
        let mut t = Vec::new();
        for (i, (dofs, d)) in pieces.iter().enumerate() {
            check_sorted(dofs, n, i)?;
            let (_, u) = d.lu_nopivot().map_err(|e| e.with_context(format!("subdomain {i}")))?;
            for p in 0..dofs.len() {
                for q in p..dofs.len() {
                    t.push((dofs[p], dofs[q], u[(p, q)]));
                }
            }
        }
        Self::from_upper_triplets(n, &t)
    }

    pub fn upper(&self) -> &CsrMatrix {
        &self.u
    }

    /// `y = B^{-1} x`.
    pub fn solve(&self, x: &[f64], y: &mut [f64]) {
        let n = self.diag.len();
        // U^T w = x, column-oriented over the rows of U
        let mut w = x.to_vec();
        for j in 0..n {
            let wj = w[j] / self.diag[j];
            w[j] = wj;
            let (cols, vals) = self.u.row(j);
            for (&k, &v) in cols.iter().zip(vals) {
                if k > j {
                    w[k] -= v * wj;
                }
            }
        }
        // z = diag(U) w, then U y = z
        for j in (0..n).rev() {
            let (cols, vals) = self.u.row(j);
            let mut s = self.diag[j] * w[j];
            for (&k, &v) in cols.iter().zip(vals) {
                if k > j {
                    s -= v * y[k];
                }
            }
            y[j] = s / self.diag[j];
        }
    }
}

impl Operator for Ilue {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.solve(x, y);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::assemble_dense;
    use rand::{Rng, SeedableRng};

    fn random_spd(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut a = m.transpose().matmul(&m).unwrap();
        a.add_assign_scaled(n as f64 * 0.1, &DenseMatrix::identity(n));
        a
    }

    #[test]
    fn single_piece_is_exact() {
        let d = random_spd(10, 1);
        let dofs: Vec<usize> = (0..10).collect();
        let chol = d.cholesky().unwrap();
        let ilue = Ilue::from_cholesky_pieces(10, &[(&dofs, &chol)]).unwrap();
        let inv = assemble_dense(&ilue).unwrap();
        let prod = inv.matmul(&d).unwrap();
        assert!(prod.max_abs_diff(&DenseMatrix::identity(10)) < 1e-10);
        let lu = Ilue::from_local_pieces(10, &[(&dofs, &d)]).unwrap();
        assert!(lu.upper().to_dense().max_abs_diff(&ilue.upper().to_dense()) < 1e-10);
    }

    #[test]
    fn overlapping_pieces_give_spd_preconditioner() {
        let d1 = random_spd(6, 2);
        let d2 = random_spd(6, 3);
        let i1: Vec<usize> = (0..6).collect();
        let i2: Vec<usize> = (3..9).collect();
        let c1 = d1.cholesky().unwrap();
        let c2 = d2.cholesky().unwrap();
        let ilue = Ilue::from_cholesky_pieces(9, &[(&i1, &c1), (&i2, &c2)]).unwrap();
        let inv = assemble_dense(&ilue).unwrap();
        assert!(inv.is_symmetric(1e-10));
        let ev = crate::linalg::symmetric_eigenvalues(&inv).unwrap();
        assert!(ev[0] > 0.0);
    }

    #[test]
    fn zero_pivot_names_subdomain() {
        let bad = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let dofs = [0usize, 1];
        let err = Ilue::from_local_pieces(2, &[(&dofs, &bad)]).unwrap_err();
        assert!(err.to_string().contains("subdomain 0"), "{err}");
        let unsorted = [1usize, 0];
        assert!(Ilue::from_local_pieces(2, &[(&unsorted, &DenseMatrix::identity(2))]).is_err());
    }
}
