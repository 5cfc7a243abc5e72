//! The multilevel ASMG preconditioner: auxiliary space correction
//! (Algorithm 1 of the method), its smoothed variant (Algorithm 2), and the
//! AMLI-cycle recursion over the hierarchy.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::asca::Hierarchy;
use crate::error::{AsmgError, Result};
use crate::linalg::{Cholesky, FnOperator, Operator};
use crate::precond::gcg::{gcg, GcgStop};
use crate::precond::smoother::Smoother;
use crate::solvers::pcg;
use crate::util::par_map;

/// How the coarse-level problem inside the cycle is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stabilization {
    /// `nu` iterations of GCG preconditioned by the next level (nonlinear AMLI cycle).
    Gcg,
    /// A single application of the next level, the polynomial `p(t) = 1 - t`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmliConfig {
    /// Inner GCG iterations per coarse solve: 1 for a V-cycle, 2 for a W-cycle.
    pub nu: usize,
    pub smoother: Smoother,
    /// Relative residual target of the PCG solves with `D`.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Relaxation parameter for stationary use, `x += C^{-1} r / tau`.
    pub tau: f64,
    pub stabilization: Stabilization,
    /// Solve with `D` by a dense Cholesky factorization instead of PCG.
    /// Only meant for small dense verification runs.
    pub exact_d: bool,
}

impl Default for AmliConfig {
    fn default() -> Self {
        Self {
            nu: 1,
            smoother: Smoother::none(),
            inner_tol: 1e-6,
            inner_max_iter: 200,
            tau: 1.0,
            stabilization: Stabilization::Gcg,
            exact_d: false,
        }
    }
}

impl AmliConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 {
            return Err(AsmgError::Config("cycle index nu must be at least 1".into()));
        }
        if !(self.tau >= 1.0) {
            return Err(AsmgError::Config(format!("relaxation tau must be >= 1, got {}", self.tau)));
        }
        if !(self.inner_tol > 0.0 && self.inner_tol < 1.0) || self.inner_max_iter == 0 {
            return Err(AsmgError::Config(format!(
                "inner tolerance must lie in (0, 1) with a positive iteration cap, got {} / {}",
                self.inner_tol, self.inner_max_iter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
struct InnerCounters {
    solves: AtomicUsize,
    iterations: AtomicUsize,
    max_iterations: AtomicUsize,
}

/// Statistics of the PCG solves with `D` since construction or the last reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InnerStats {
    pub solves: usize,
    pub iterations: usize,
    /// Worst-case `n_i`.
    pub max_iterations: usize,
}

#[derive(Debug)]
pub struct Asmg {
    hierarchy: Hierarchy,
    config: AmliConfig,
    diag_hat: Vec<Vec<f64>>,
    d_factors: Vec<Cholesky>,
    counters: InnerCounters,
}

fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

impl Asmg {
    pub fn new(hierarchy: Hierarchy, config: AmliConfig) -> Result<Self> {
        config.validate()?;
        let diag_hat = hierarchy.levels.iter().map(|l| l.a_hat.diagonal()).collect();
        let d_factors = if config.exact_d {
            hierarchy
                .levels
                .iter()
                .map(|l| l.d11.to_dense().cholesky())
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            hierarchy,
            config,
            diag_hat,
            d_factors,
            counters: InnerCounters::default(),
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn config(&self) -> &AmliConfig {
        &self.config
    }

    pub fn stats(&self) -> InnerStats {
        InnerStats {
            solves: self.counters.solves.load(Ordering::Relaxed),
            iterations: self.counters.iterations.load(Ordering::Relaxed),
            max_iterations: self.counters.max_iterations.load(Ordering::Relaxed),
        }
    }

    pub fn reset_stats(&self) {
        self.counters.solves.store(0, Ordering::Relaxed);
        self.counters.iterations.store(0, Ordering::Relaxed);
        self.counters.max_iterations.store(0, Ordering::Relaxed);
    }

    /// `D^{-1} b` by ILUE-preconditioned CG.
    fn d_solve(&self, k: usize, b: &[f64]) -> Result<Vec<f64>> {
        let lvl = &self.hierarchy.levels[k];
        if let Some(chol) = self.d_factors.get(k) {
            self.counters.solves.fetch_add(1, Ordering::Relaxed);
            return Ok(chol.solve(b));
        }
        let mut x = vec![0.0; b.len()];
        let rep = pcg(&lvl.d11, &lvl.ilue, b, &mut x, self.config.inner_tol, self.config.inner_max_iter)?;
        if !rep.converged {
            return Err(AsmgError::SolverStall {
                solver: "ILUE-PCG",
                iterations: rep.iterations,
                residual: rep.relative_residual(),
            });
        }
        self.counters.solves.fetch_add(1, Ordering::Relaxed);
        self.counters.iterations.fetch_add(rep.iterations, Ordering::Relaxed);
        self.counters.max_iterations.fetch_max(rep.iterations, Ordering::Relaxed);
        Ok(x)
    }

    /// Algorithm 1 at level `k < l`: `out = C_hat^{(k)}[dh]`, with `dh` in
    /// the two-level basis of level `k`.
    pub fn apply_c(&self, k: usize, dh: &[f64], out: &mut [f64]) -> Result<()> {
        let lvl = &self.hierarchy.levels[k];
        let n1 = lvl.n1();
        let (d1, d2) = dh.split_at(n1);

        // q~ = Pi^T d: q~1^(i) = A_{i:11} R_{i:1} D^{-1} d1, q~2 = d2
        let w = self.d_solve(k, d1)?;
        // p~1^(i) = A_{i:11}^{-1} q~1^(i)
        let p1 = par_map(lvl.blocks.len(), |i| {
            let b = &lvl.blocks[i];
            let q1 = b.a11.mul_vec(&gather(&w, &b.fine));
            Ok(b.chol11.solve(&q1))
        })?;

        // p~2 = coarse solve of q~2 - A~21 p~1
        let mut r2 = d2.to_vec();
        for (b, p) in lvl.blocks.iter().zip(&p1) {
            for (r, &pr) in p.iter().enumerate() {
                for (c, &g) in b.coarse.iter().enumerate() {
                    r2[g] -= b.a12[(r, c)] * pr;
                }
            }
        }
        let mut p2 = vec![0.0; lvl.n2()];
        self.coarse_solve(k + 1, &r2, &mut p2)?;

        // q~1^(i) = p~1^(i) - A_{i:11}^{-1} A_{i:12} R_{i:2} p~2, then out = Pi q~
        let y = par_map(lvl.blocks.len(), |i| {
            let b = &lvl.blocks[i];
            let t = b.chol11.solve(&b.a12.mul_vec(&gather(&p2, &b.coarse)));
            let q1: Vec<f64> = p1[i].iter().zip(&t).map(|(a, b)| a - b).collect();
            Ok(b.a11.mul_vec(&q1))
        })?;
        let mut z = vec![0.0; n1];
        for (b, yi) in lvl.blocks.iter().zip(&y) {
            for (&g, v) in b.fine.iter().zip(yi) {
                z[g] += v;
            }
        }
        let v1 = self.d_solve(k, &z)?;
        out[..n1].copy_from_slice(&v1);
        out[n1..].copy_from_slice(&p2);
        Ok(())
    }

    /// Algorithm 2 at level `k < l`: smoothing around [`Asmg::apply_c`].
    pub fn apply_b(&self, k: usize, dh: &[f64], out: &mut [f64]) -> Result<()> {
        let sm = &self.config.smoother;
        if !sm.is_active() {
            return self.apply_c(k, dh, out);
        }
        let a = &self.hierarchy.levels[k].a_hat;
        let diag = &self.diag_hat[k];
        let mut u = vec![0.0; dh.len()];
        sm.pre(a, diag, dh, &mut u)?;
        let au = a.mul_vec(&u);
        let res: Vec<f64> = dh.iter().zip(&au).map(|(d, x)| d - x).collect();
        self.apply_c(k, &res, out)?;
        for (o, ui) in out.iter_mut().zip(&u) {
            *o += ui;
        }
        sm.post(a, diag, dh, out)
    }

    /// Approximate inverse of `A^{(k)}` in the original basis of level `k`:
    /// direct solve on the coarsest level, `J B_hat J^T` above it.
    pub fn apply_level(&self, k: usize, d: &[f64], out: &mut [f64]) -> Result<()> {
        if k == self.hierarchy.depth() {
            out.copy_from_slice(d);
            self.hierarchy.coarsest.chol.solve_in_place(out);
            return Ok(());
        }
        let t = &self.hierarchy.levels[k].transform;
        let mut dh = vec![0.0; d.len()];
        t.apply_jt(d, &mut dh);
        let mut vh = vec![0.0; d.len()];
        self.apply_b(k, &dh, &mut vh)?;
        t.from_two_level(&vh, out);
        Ok(())
    }

    /// Two-level-basis-free form of Algorithm 1: `J C_hat J^T d` at level `k < l`.
    pub fn apply_c_original(&self, k: usize, d: &[f64], out: &mut [f64]) -> Result<()> {
        let t = &self.hierarchy.levels[k].transform;
        let mut dh = vec![0.0; d.len()];
        t.apply_jt(d, &mut dh);
        let mut vh = vec![0.0; d.len()];
        self.apply_c(k, &dh, &mut vh)?;
        t.from_two_level(&vh, out);
        Ok(())
    }

    /// Coarse problem `A^{(k)} p = r` inside the cycle of level `k - 1`.
    fn coarse_solve(&self, k: usize, r: &[f64], out: &mut [f64]) -> Result<()> {
        if k == self.hierarchy.depth() || self.config.stabilization == Stabilization::Linear {
            return self.apply_level(k, r, out);
        }
        let lvl = &self.hierarchy.levels[k];
        let n = r.len();
        let mut rh = vec![0.0; n];
        lvl.transform.apply_jt(r, &mut rh);
        let prec = FnOperator::new(n, |x: &[f64], y: &mut [f64]| self.apply_b(k, x, y));
        let mut xh = vec![0.0; n];
        gcg(&lvl.a_hat, &prec, &rh, &mut xh, GcgStop::Iterations(self.config.nu), k)?;
        lvl.transform.from_two_level(&xh, out);
        Ok(())
    }
}

impl Operator for Asmg {
    fn dim(&self) -> usize {
        self.hierarchy.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_level(0, x, y)
    }
}
