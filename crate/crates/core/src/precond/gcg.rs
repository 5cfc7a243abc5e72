//! Generalized (flexible) conjugate gradients for variable preconditioners.
//!
//! Each new direction is the preconditioned residual made A-orthogonal to all
//! previous directions, so the method stays well defined when the
//! preconditioner changes from one application to the next.

use crate::error::{AsmgError, Result};
use crate::linalg::{axpy, dot, norm2, Operator};
use crate::solvers::IterationReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GcgStop {
    /// Exactly this many iterations (AMLI stabilization).
    Iterations(usize),
    /// Until `||r|| <= rel_tol ||r_0||`, at most `max_iter` iterations.
    Tolerance { rel_tol: f64, max_iter: usize },
}

/// Solves `A x = b` starting from the given `x`. `level` is only used in error reports.
pub fn gcg(
    a: &dyn Operator,
    precond: &dyn Operator,
    b: &[f64],
    x: &mut [f64],
    stop: GcgStop,
    level: usize,
) -> Result<IterationReport> {
    let n = a.dim();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let r0 = norm2(&r);
    let mut residuals = vec![r0];
    let (max_iter, target) = match stop {
        GcgStop::Iterations(k) => (k, -1.0),
        GcgStop::Tolerance { rel_tol, max_iter } => (max_iter, rel_tol * r0),
    };
    if r0 == 0.0 || r0 <= target {
        return Ok(IterationReport {
            iterations: 0,
            residuals,
            converged: true,
        });
    }
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut adirs: Vec<Vec<f64>> = Vec::new();
    let mut curvs: Vec<f64> = Vec::new();
    let mut z = vec![0.0; n];
    for it in 1..=max_iter {
        precond.apply(&r, &mut z)?;
        let mut d = z.clone();
        for ((dj, adj), cj) in dirs.iter().zip(&adirs).zip(&curvs) {
            axpy(-dot(&z, adj) / cj, dj, &mut d);
        }
        let mut ad = vec![0.0; n];
        a.apply(&d, &mut ad)?;
        let curv = dot(&d, &ad);
        if !(curv > 0.0) {
            if norm2(&d) == 0.0 {
                // preconditioner annihilated the residual: nothing left to do
                break;
            }
            return Err(AsmgError::Breakdown {
                solver: "GCG",
                level,
                curvature: curv,
            });
        }
        let alpha = dot(&d, &r) / curv;
        axpy(alpha, &d, x);
        axpy(-alpha, &ad, &mut r);
        let rn = norm2(&r);
        residuals.push(rn);
        if !rn.is_finite() {
            return Err(AsmgError::SolverStall {
                solver: "GCG",
                iterations: it,
                residual: rn / r0,
            });
        }
        if rn <= target {
            return Ok(IterationReport {
                iterations: it,
                residuals,
                converged: true,
            });
        }
        dirs.push(d);
        adirs.push(ad);
        curvs.push(curv);
    }
    let iterations = residuals.len() - 1;
    Ok(IterationReport {
        iterations,
        converged: matches!(stop, GcgStop::Iterations(_)),
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Cholesky, CsrMatrix, DenseMatrix, FnOperator, IdentityOperator};
    use rand::{Rng, SeedableRng};

    fn random_spd(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut a = m.transpose().matmul(&m).unwrap();
        for i in 0..n {
            a[(i, i)] += 1.0 + 10.0 * i as f64;
        }
        a
    }

    #[test]
    fn exact_preconditioner_one_iteration() {
        let a = random_spd(15, 1);
        let chol = Cholesky::factor(&a).unwrap();
        let csr = CsrMatrix::from_dense(&a);
        let b: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let mut x = vec![0.0; 15];
        let rep = gcg(&csr, &chol, &b, &mut x, GcgStop::Tolerance { rel_tol: 1e-10, max_iter: 10 }, 0).unwrap();
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn jacobi_preconditioned_matches_dense_solve() {
        let a = random_spd(20, 2);
        let csr = CsrMatrix::from_dense(&a);
        let diag = csr.diagonal();
        let jac = FnOperator::new(20, |x: &[f64], y: &mut [f64]| {
            for i in 0..20 {
                y[i] = x[i] / diag[i];
            }
            Ok(())
        });
        let b: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let mut x = vec![0.0; 20];
        let rep = gcg(&csr, &jac, &b, &mut x, GcgStop::Tolerance { rel_tol: 1e-12, max_iter: 100 }, 0).unwrap();
        assert!(rep.converged);
        let exact = Cholesky::factor(&a).unwrap().solve(&b);
        let err: f64 = x.iter().zip(&exact).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * norm2(&exact));
    }

    #[test]
    fn fixed_iterations_and_breakdown() {
        let a = random_spd(8, 3);
        let csr = CsrMatrix::from_dense(&a);
        let b = vec![1.0; 8];
        let mut x = vec![0.0; 8];
        let rep = gcg(&csr, &IdentityOperator(8), &b, &mut x, GcgStop::Iterations(2), 3).unwrap();
        assert_eq!(rep.iterations, 2);
        let neg = CsrMatrix::from_dense(&a.scaled(-1.0));
        let mut x = vec![0.0; 8];
        let err = gcg(&neg, &IdentityOperator(8), &b, &mut x, GcgStop::Iterations(2), 3).unwrap_err();
        assert!(matches!(err, AsmgError::Breakdown { level: 3, .. }));
    }
}
