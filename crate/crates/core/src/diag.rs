//! Convergence and robustness diagnostics: residual reduction factors,
//! error-propagation norms, the constant `c_Pi = ||pi_D||^2_A~`, operator
//! complexity and a discrete inf-sup check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asca::{AuxLevel, Hierarchy};
use crate::error::{AsmgError, Result};
use crate::linalg::{
    dot, generalized_symmetric_eigenvalues, symmetric_eigenvalues, Cholesky, CsrMatrix, DenseMatrix, Operator,
};
use crate::mesh::SaddleSystem;
use crate::solvers::pcg;

/// Average residual reduction per iteration, `(||r_n|| / ||r_0||)^{1/n}`.
pub fn rho_r(residuals: &[f64]) -> Result<f64> {
    if residuals.len() < 2 {
        return Err(AsmgError::Config("residual history needs at least two entries".into()));
    }
    let r0 = residuals[0];
    if !(r0 > 0.0) {
        return Err(AsmgError::Config("initial residual must be positive".into()));
    }
    let n = (residuals.len() - 1) as f64;
    Ok((residuals[residuals.len() - 1] / r0).powf(1.0 / n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the extreme Ritz values settled.
    pub converged: bool,
}

/// Extreme eigenvalues of `T`, self-adjoint in the inner product `<x, M y>`,
/// by Lanczos with full reorthogonalization. Stops once both extreme Ritz
/// values change by less than `rel_tol` times the spectral radius estimate
/// between consecutive steps.
pub fn lanczos_extremes(
    t: &dyn Operator,
    m: &dyn Operator,
    seed: u64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate> {
    let n = t.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut mv = vec![0.0; n];
    m.apply(&v, &mut mv)?;
    let nrm = dot(&v, &mv).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    mv.iter_mut().for_each(|x| *x /= nrm);
    let mut basis = vec![v];
    let mut mbasis = vec![mv];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut prev: Option<(f64, f64)> = None;
    let mut w = vec![0.0; n];
    let mut mw = vec![0.0; n];
    for it in 1..=max_iter.min(n) {
        let j = basis.len() - 1;
        t.apply(&basis[j], &mut w)?;
        let alpha = dot(&w, &mbasis[j]);
        alphas.push(alpha);
        for _ in 0..2 {
            for (b, mb) in basis.iter().zip(&mbasis) {
                let c = dot(&w, mb);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        m.apply(&w, &mut mw)?;
        let beta = dot(&w, &mw).max(0.0).sqrt();

        let k = alphas.len();
        let tri = DenseMatrix::from_fn(k, k, |p, q| {
            if p == q {
                alphas[p]
            } else if p + 1 == q {
                betas[p]
            } else if q + 1 == p {
                betas[q]
            } else {
                0.0
            }
        });
        let ev = symmetric_eigenvalues(&tri)?;
        let (lo, hi) = (ev[0], ev[k - 1]);
        let scale = lo.abs().max(hi.abs());
        let settled =
            prev.is_some_and(|(plo, phi)| (lo - plo).abs() <= rel_tol * scale && (hi - phi).abs() <= rel_tol * scale);
        if settled || beta <= 1e-14 * alpha.abs().max(1.0) || it == n {
            return Ok(SpectralEstimate {
                lambda_min: lo,
                lambda_max: hi,
                iterations: it,
                converged: true,
            });
        }
        prev = Some((lo, hi));
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
        mbasis.push(mw.iter().map(|x| x / beta).collect());
    }
    let (lo, hi) = prev.unwrap_or((f64::NAN, f64::NAN));
    Ok(SpectralEstimate {
        lambda_min: lo,
        lambda_max: hi,
        iterations: max_iter,
        converged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    pub rho_e: f64,
    pub spectrum: SpectralEstimate,
}

/// `||I - C^{-1} A||_A = max |1 - lambda(C^{-1} A)|` for a linear SPD preconditioner.
pub fn estimate_rho_e(a: &CsrMatrix, c_inv: &dyn Operator, seed: u64, max_iter: usize) -> Result<RhoEstimate> {
    let n = a.nrows();
    let t = crate::linalg::FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        let ax = a.mul_vec(x);
        c_inv.apply(&ax, y)
    });
    let s = lanczos_extremes(&t, a, seed, 1e-4, max_iter)?;
    Ok(RhoEstimate {
        rho_e: (1.0 - s.lambda_min).abs().max((s.lambda_max - 1.0).abs()),
        spectrum: s,
    })
}

/// Dense eigenvalues of `C^{-1} A` given the assembled `C^{-1}`, computed as
/// the eigenvalues of `L^T C^{-1} L` with `A = L L^T` after symmetric Jacobi
/// scaling of both operators.
pub fn dense_preconditioned_spectrum(a: &CsrMatrix, c_inv: &DenseMatrix) -> Result<Vec<f64>> {
    let d: Vec<f64> = a.diagonal().iter().map(|v| v.sqrt()).collect();
    let mut a_s = a.to_dense();
    let mut c_s = c_inv.clone();
    for i in 0..d.len() {
        for j in 0..d.len() {
            a_s[(i, j)] /= d[i] * d[j];
            c_s[(i, j)] *= d[i] * d[j];
        }
    }
    let l = a_s.cholesky()?.l();
    let mut m = l.transpose().matmul(&c_s)?.matmul(&l)?;
    let mt = m.transpose();
    m.add_assign_scaled(1.0, &mt);
    symmetric_eigenvalues(&m.scaled(0.5))
}

/// The auxiliary space of one level: `N~ = sum_i N_{i:1} + N_2` unknowns made
/// of the concatenated local fine blocks followed by the global coarse block.
pub struct AuxSpace<'a> {
    level: &'a AuxLevel,
    offsets: Vec<usize>,
    q_chol: Cholesky,
    d_chol: Option<Cholesky>,
}

/// Largest `N_1` for which [`AuxSpace`] factors `D` densely; above it `D` is
/// solved by ILUE-preconditioned CG to a relative residual of `1e-13`.
pub const DENSE_D_CAP: usize = 2500;

impl<'a> AuxSpace<'a> {
    pub fn new(level: &'a AuxLevel) -> Result<Self> {
        let mut offsets = Vec::with_capacity(level.blocks.len() + 1);
        let mut off = 0;
        for b in &level.blocks {
            offsets.push(off);
            off += b.fine.len();
        }
        offsets.push(off);
        Ok(Self {
            level,
            offsets,
            q_chol: level.q.to_dense().cholesky()?,
            d_chol: if level.n1() <= DENSE_D_CAP {
                Some(level.d11.to_dense().cholesky()?)
            } else {
                None
            },
        })
    }

    /// `N~_1`.
    pub fn n1(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn dim(&self) -> usize {
        self.n1() + self.level.n2()
    }

    /// Dense `A~`.
    pub fn dense_a_tilde(&self) -> DenseMatrix {
        let n1 = self.n1();
        let mut a = DenseMatrix::zeros(self.dim(), self.dim());
        for (b, &o) in self.level.blocks.iter().zip(&self.offsets) {
            let k = b.fine.len();
            for p in 0..k {
                for q in 0..k {
                    a[(o + p, o + q)] = b.a11[(p, q)];
                }
                for (c, &g) in b.coarse.iter().enumerate() {
                    a[(o + p, n1 + g)] = b.a12[(p, c)];
                    a[(n1 + g, o + p)] = b.a12[(p, c)];
                }
            }
            for (p, &gp) in b.coarse.iter().enumerate() {
                for (q, &gq) in b.coarse.iter().enumerate() {
                    a[(n1 + gp, n1 + gq)] += b.a22[(p, q)];
                }
            }
        }
        a
    }

    /// Dense `R`: `N x N~`, summing local fine copies and passing the coarse block.
    pub fn dense_r(&self) -> DenseMatrix {
        let (n1g, n1) = (self.level.n1(), self.n1());
        let mut r = DenseMatrix::zeros(n1g + self.level.n2(), self.dim());
        for (b, &o) in self.level.blocks.iter().zip(&self.offsets) {
            for (p, &g) in b.fine.iter().enumerate() {
                r[(g, o + p)] = 1.0;
            }
        }
        for c in 0..self.level.n2() {
            r[(n1g + c, n1 + c)] = 1.0;
        }
        r
    }

    /// Dense `pi = R^T D^{-1} R D~`.
    pub fn dense_pi(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        let mut pi = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_pi(&e, &mut y)?;
            for i in 0..n {
                pi[(i, j)] = y[i];
            }
            e[j] = 0.0;
        }
        Ok(pi)
    }

    fn d_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if let Some(chol) = &self.d_chol {
            return Ok(chol.solve(b));
        }
        let mut x = vec![0.0; b.len()];
        let rep = pcg(&self.level.d11, &self.level.ilue, b, &mut x, 1e-13, 1000)?;
        if !rep.converged {
            return Err(AsmgError::SolverStall {
                solver: "ILUE-PCG",
                iterations: rep.iterations,
                residual: rep.relative_residual(),
            });
        }
        Ok(x)
    }

    /// `y = pi x`.
    pub fn apply_pi(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n1 = self.n1();
        let mut z = vec![0.0; self.level.n1()];
        for (b, &o) in self.level.blocks.iter().zip(&self.offsets) {
            let local = b.a11.mul_vec(&x[o..o + b.fine.len()]);
            for (&g, v) in b.fine.iter().zip(&local) {
                z[g] += v;
            }
        }
        let w = self.d_solve(&z)?;
        for (b, &o) in self.level.blocks.iter().zip(&self.offsets) {
            for (p, &g) in b.fine.iter().enumerate() {
                y[o + p] = w[g];
            }
        }
        y[n1..].copy_from_slice(&x[n1..]);
        Ok(())
    }

    /// `y = A~ x`.
    pub fn apply_a_tilde(&self, x: &[f64], y: &mut [f64]) {
        let n1 = self.n1();
        y.iter_mut().for_each(|v| *v = 0.0);
        for (b, &o) in self.level.blocks.iter().zip(&self.offsets) {
            let k = b.fine.len();
            let xf = &x[o..o + k];
            let xc: Vec<f64> = b.coarse.iter().map(|&g| x[n1 + g]).collect();
            let yf = b.a11.mul_vec(xf);
            let yf2 = b.a12.mul_vec(&xc);
            for p in 0..k {
                y[o + p] = yf[p] + yf2[p];
            }
            let yc = b.a22.mul_vec(&xc);
            for (c, &g) in b.coarse.iter().enumerate() {
                let t: f64 = (0..k).map(|p| b.a12[(p, c)] * xf[p]).sum();
                y[n1 + g] += t + yc[c];
            }
        }
    }

    /// `y = A~^{-1} x` by block elimination; the Schur complement of `A~` is `Q`.
    pub fn solve_a_tilde(&self, x: &[f64], y: &mut [f64]) {
        let n1 = self.n1();
        let blocks = &self.level.blocks;
        let u: Vec<Vec<f64>> = blocks
            .iter()
            .zip(&self.offsets)
            .map(|(b, &o)| b.chol11.solve(&x[o..o + b.fine.len()]))
            .collect();
        let mut r2 = x[n1..].to_vec();
        for (b, ui) in blocks.iter().zip(&u) {
            for (c, &g) in b.coarse.iter().enumerate() {
                r2[g] -= (0..b.fine.len()).map(|p| b.a12[(p, c)] * ui[p]).sum::<f64>();
            }
        }
        self.q_chol.solve_in_place(&mut r2);
        for ((b, ui), &o) in blocks.iter().zip(&u).zip(&self.offsets) {
            let xc: Vec<f64> = b.coarse.iter().map(|&g| r2[g]).collect();
            let t = b.chol11.solve(&b.a12.mul_vec(&xc));
            for p in 0..b.fine.len() {
                y[o + p] = ui[p] - t[p];
            }
        }
        y[n1..].copy_from_slice(&r2);
    }
}

/// Default size above which `c_Pi` is estimated iteratively.
pub const DENSE_CPI_CAP: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CPiEstimate {
    pub c_pi: f64,
    pub dense: bool,
    pub aux_dim: usize,
    pub iterations: usize,
}

/// Dense `c_Pi = lambda_max(pi^T A~ pi, A~)`.
pub fn c_pi_dense(level: &AuxLevel) -> Result<CPiEstimate> {
    let aux = AuxSpace::new(level)?;
    let at = aux.dense_a_tilde();
    let pi = aux.dense_pi()?;
    let mut num = pi.transpose().matmul(&at)?.matmul(&pi)?;
    let nt = num.transpose();
    num.add_assign_scaled(1.0, &nt);
    let ev = generalized_symmetric_eigenvalues(&num.scaled(0.5), &at)?;
    Ok(CPiEstimate {
        c_pi: ev[ev.len() - 1],
        dense: true,
        aux_dim: aux.dim(),
        iterations: 0,
    })
}

/// Lanczos estimate of `c_Pi` on `A~^{-1} pi^T A~ pi` in the `A~` inner product.
pub fn c_pi_iterative(level: &AuxLevel, seed: u64, max_iter: usize) -> Result<CPiEstimate> {
    let aux = AuxSpace::new(level)?;
    let n = aux.dim();
    let t = crate::linalg::FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        let mut px = vec![0.0; n];
        aux.apply_pi(x, &mut px)?;
        let mut apx = vec![0.0; n];
        aux.apply_a_tilde(&px, &mut apx);
        // pi^T v = D~ R^T D^{-1} R v; apply through the transpose identity pi^T A~ = A~ pi~
        let mut w = vec![0.0; n];
        apply_pi_transpose(&aux, &apx, &mut w)?;
        aux.solve_a_tilde(&w, y);
        Ok(())
    });
    let m = crate::linalg::FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        aux.apply_a_tilde(x, y);
        Ok(())
    });
    let s = lanczos_extremes(&t, &m, seed, 1e-6, max_iter)?;
    Ok(CPiEstimate {
        c_pi: s.lambda_max,
        dense: false,
        aux_dim: n,
        iterations: s.iterations,
    })
}

/// `y = pi^T x = D~ R^T D^{-1} R x`.
fn apply_pi_transpose(aux: &AuxSpace<'_>, x: &[f64], y: &mut [f64]) -> Result<()> {
    let level = aux.level;
    let n1 = aux.n1();
    let mut z = vec![0.0; level.n1()];
    for (b, &o) in level.blocks.iter().zip(&aux.offsets) {
        for (p, &g) in b.fine.iter().enumerate() {
            z[g] += x[o + p];
        }
    }
    let w = aux.d_solve(&z)?;
    for (b, &o) in level.blocks.iter().zip(&aux.offsets) {
        let local: Vec<f64> = b.fine.iter().map(|&g| w[g]).collect();
        let yl = b.a11.mul_vec(&local);
        y[o..o + b.fine.len()].copy_from_slice(&yl);
    }
    y[n1..].copy_from_slice(&x[n1..]);
    Ok(())
}

/// `c_Pi` densely when the auxiliary space has at most `cap` unknowns, iteratively otherwise.
pub fn estimate_c_pi(level: &AuxLevel, cap: usize) -> Result<CPiEstimate> {
    let aux_dim = level.blocks.iter().map(|b| b.fine.len()).sum::<usize>() + level.n2();
    if aux_dim <= cap {
        c_pi_dense(level)
    } else {
        c_pi_iterative(level, 17, 300)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub nnz: Vec<usize>,
    pub dims: Vec<usize>,
    /// `sum_k nnz(A^{(k)}) / nnz(A^{(0)})`.
    pub ratio: f64,
    /// Coarse columns (level, column, nnz, bound) violating the per-column sparsity bound.
    pub violations: Vec<(usize, usize, usize, usize)>,
    pub max_column_nnz: Vec<usize>,
    pub max_column_bound: Vec<usize>,
}

/// Nonzeros per level and the check `nnz_j(Q) <= sum_{i : j in C_i} |C_i|`.
pub fn operator_complexity(h: &Hierarchy) -> ComplexityReport {
    let nnz = h.nnz_per_level();
    let dims = (0..=h.depth()).map(|k| h.matrix(k).nrows()).collect();
    let ratio = nnz.iter().sum::<usize>() as f64 / nnz[0] as f64;
    let mut violations = Vec::new();
    let mut max_column_nnz = Vec::new();
    let mut max_column_bound = Vec::new();
    for (k, lvl) in h.levels.iter().enumerate() {
        let mut bound = vec![0usize; lvl.n2()];
        for b in &lvl.blocks {
            for &j in &b.coarse {
                bound[j] += b.coarse.len();
            }
        }
        // Q is symmetric, so column counts equal row counts
        let counts: Vec<usize> = (0..lvl.q.nrows()).map(|j| lvl.q.row(j).0.len()).collect();
        for (j, (&c, &bd)) in counts.iter().zip(&bound).enumerate() {
            if c > bd {
                violations.push((k, j, c, bd));
            }
        }
        max_column_nnz.push(counts.iter().copied().max().unwrap_or(0));
        max_column_bound.push(bound.iter().copied().max().unwrap_or(0));
    }
    ComplexityReport {
        nnz,
        dims,
        ratio,
        violations,
        max_column_nnz,
        max_column_bound,
    }
}

/// Smallest singular value of `M_p^{-1/2} B A^{-1/2}` (dense).
pub fn inf_sup_constant(system: &SaddleSystem) -> Result<f64> {
    let a = system.a.to_dense().cholesky()?;
    let b = system.b_div.to_dense();
    // A^{-1} B^T, then S = M^{-1/2} B A^{-1} B^T M^{-1/2}
    let x = a.solve_matrix(&b.transpose());
    let mut s = b.matmul(&x)?;
    let scale: Vec<f64> = system.m_p.iter().map(|m| 1.0 / m.sqrt()).collect();
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            s[(i, j)] *= scale[i] * scale[j];
        }
    }
    let st = s.transpose();
    s.add_assign_scaled(1.0, &st);
    let ev = symmetric_eigenvalues(&s.scaled(0.5))?;
    Ok(ev[0].max(0.0).sqrt())
}


#[cfg(test)]
mod small_covering_tests {
    use super::*;
    use crate::asca::{build_hierarchy, HierarchyConfig};
    use crate::coeff::{gen_random_field, IslandLayout};
    use crate::mesh::Grid;

    #[test]
    fn q_is_schur_of_a_tilde_on_tiny_coverings() {
        for (n, sub, count) in [(4usize, 4usize, 1usize), (8, 4, 9)] {
            let g = Grid::new(n).unwrap();
            let f = gen_random_field(n, 2, 3, &IslandLayout::default()).unwrap();
            let h = build_hierarchy(&g, &f, HierarchyConfig { levels: 1, sub_cells: sub, coarsest_n: 1 }).unwrap();
            let lvl = &h.levels[0];
            assert_eq!(lvl.blocks.len(), count);
            let aux = AuxSpace::new(lvl).unwrap();
            let at = aux.dense_a_tilde();
            let n1 = aux.n1();
            let idx1: Vec<usize> = (0..n1).collect();
            let idx2: Vec<usize> = (n1..aux.dim()).collect();
            let a11 = at.select(&idx1, &idx1).cholesky().unwrap();
            let a12 = at.select(&idx1, &idx2);
            let mut s = at.select(&idx2, &idx2);
            s.add_assign_scaled(-1.0, &a12.transpose().matmul(&a11.solve_matrix(&a12)).unwrap());
            let rel = lvl.q.to_dense().rel_frobenius_diff(&s);
            assert!(rel < 1e-12, "n={n}: {rel}");
        }
    }
}
