//! Outer Krylov solvers: PCG for SPD systems, preconditioned MinRes for the
//! mixed system with a block-diagonal preconditioner, and the stationary
//! iteration used to measure contraction of linear cycles.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use crate::error::{AsmgError, Result};
use crate::linalg::{axpy, dot, norm2, Cholesky, Operator};
use crate::mesh::SaddleSystem;
use crate::precond::amli::Asmg;
use crate::precond::gcg::{gcg, GcgStop};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationReport {
    pub iterations: usize,
    /// Residual norms, starting with the initial one. For MinRes these are the
    /// preconditioner-weighted norms that drive the stopping test.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl IterationReport {
    pub fn relative_residual(&self) -> f64 {
        match (self.residuals.first(), self.residuals.last()) {
            (Some(&r0), Some(&rn)) if r0 > 0.0 => rn / r0,
            _ => 0.0,
        }
    }
}

fn residual(a: &dyn Operator, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mut r = vec![0.0; b.len()];
    a.apply(x, &mut r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(r)
}

/// Preconditioned conjugate gradients until `||r|| <= rel_tol ||r_0||`.
/// Hitting `max_iter` is reported through `converged = false`.
pub fn pcg(
    a: &dyn Operator,
    precond: &dyn Operator,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<IterationReport> {
    let n = b.len();
    if a.dim() != n || x.len() != n {
        return Err(AsmgError::Dimension {
            context: "PCG system",
            expected: a.dim(),
            found: n,
        });
    }
    let mut r = residual(a, b, x)?;
    let r0 = norm2(&r);
    let mut residuals = vec![r0];
    if r0 == 0.0 {
        return Ok(IterationReport {
            iterations: 0,
            residuals,
            converged: true,
        });
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.apply(&p, &mut ap)?;
        let curv = dot(&p, &ap);
        if !(curv > 0.0) {
            return Err(AsmgError::Breakdown {
                solver: "PCG",
                level: 0,
                curvature: curv,
            });
        }
        let alpha = rz / curv;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rn = norm2(&r);
        residuals.push(rn);
        if rn <= rel_tol * r0 {
            return Ok(IterationReport {
                iterations: it,
                residuals,
                converged: true,
            });
        }
        if !rn.is_finite() {
            break;
        }
        precond.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(IterationReport {
        iterations: residuals.len() - 1,
        residuals,
        converged: false,
    })
}

/// Preconditioned MinRes for symmetric (indefinite) `A` with SPD
/// preconditioner application `M ~ A^{-1}`. Stops when the `M`-norm of the
/// residual has dropped by `rel_tol`.
pub fn minres(
    a: &dyn Operator,
    precond: &dyn Operator,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<IterationReport> {
    let n = b.len();
    let not_spd = |v: f64| AsmgError::Breakdown {
        solver: "MinRes preconditioner",
        level: 0,
        curvature: v,
    };
    let mut r1 = residual(a, b, x)?;
    let mut y = vec![0.0; n];
    precond.apply(&r1, &mut y)?;
    let ry = dot(&r1, &y);
    if ry < 0.0 {
        return Err(not_spd(ry));
    }
    let beta1 = ry.sqrt();
    let mut residuals = vec![beta1];
    if beta1 == 0.0 {
        return Ok(IterationReport {
            iterations: 0,
            residuals,
            converged: true,
        });
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    for itn in 1..=max_iter {
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi / beta;
        }
        a.apply(&v, &mut y)?;
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond.apply(&r2, &mut y)?;
        oldb = beta;
        let ry = dot(&r2, &y);
        if ry < 0.0 {
            return Err(not_spd(ry));
        }
        beta = ry.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        residuals.push(phibar);
        if phibar <= rel_tol * beta1 || beta == 0.0 {
            return Ok(IterationReport {
                iterations: itn,
                residuals,
                converged: true,
            });
        }
    }
    Ok(IterationReport {
        iterations: max_iter,
        residuals,
        converged: false,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StationaryReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    /// `||x_k - x*||_A`, when the exact solution was supplied.
    pub errors: Vec<f64>,
    pub converged: bool,
}

/// `x <- x + tau^{-1} C^{-1} (b - A x)` until the error (if `exact` is given)
/// or else the residual has been reduced by `reduction`.
pub fn stationary(
    a: &dyn Operator,
    precond: &dyn Operator,
    b: &[f64],
    x: &mut [f64],
    tau: f64,
    exact: Option<&[f64]>,
    reduction: f64,
    max_iter: usize,
) -> Result<StationaryReport> {
    let n = b.len();
    let energy = |x: &[f64]| -> Result<f64> {
        let e: Vec<f64> = x.iter().zip(exact.unwrap_or(&[])).map(|(p, q)| p - q).collect();
        let mut ae = vec![0.0; n];
        a.apply(&e, &mut ae)?;
        Ok(dot(&e, &ae).max(0.0).sqrt())
    };
    let mut r = residual(a, b, x)?;
    let mut rep = StationaryReport {
        residuals: vec![norm2(&r)],
        ..Default::default()
    };
    if exact.is_some() {
        rep.errors.push(energy(x)?);
    }
    let target = |rep: &StationaryReport| match exact {
        Some(_) => rep.errors[rep.errors.len() - 1] <= reduction * rep.errors[0],
        None => rep.residuals[rep.residuals.len() - 1] <= reduction * rep.residuals[0],
    };
    let mut c = vec![0.0; n];
    for it in 1..=max_iter {
        if target(&rep) {
            break;
        }
        precond.apply(&r, &mut c)?;
        axpy(1.0 / tau, &c, x);
        r = residual(a, b, x)?;
        rep.residuals.push(norm2(&r));
        if exact.is_some() {
            rep.errors.push(energy(x)?);
        }
        rep.iterations = it;
    }
    rep.converged = target(&rep);
    Ok(rep)
}

/// Approximation of `A^{-1}` used in the velocity block.
#[derive(Debug, Clone)]
pub enum VelocitySolve {
    /// Dense direct solve, for small problems.
    Exact(Arc<Cholesky>),
    /// One application of the ASMG preconditioner.
    Single(Arc<Asmg>),
    /// ASMG-preconditioned GCG until the residual has dropped by `varpi`.
    Iterated { asmg: Arc<Asmg>, varpi: f64, max_iter: usize },
}

/// `diag(A^{-1}, M_p^{-1})` with the velocity block approximated by [`VelocitySolve`].
#[derive(Debug)]
pub struct BlockPreconditioner {
    velocity: VelocitySolve,
    m_p: Vec<f64>,
    applications: AtomicUsize,
    inner_total: AtomicUsize,
    inner_max: AtomicUsize,
}

impl BlockPreconditioner {
    pub fn new(velocity: VelocitySolve, m_p: Vec<f64>) -> Self {
        Self {
            velocity,
            m_p,
            applications: AtomicUsize::new(0),
            inner_total: AtomicUsize::new(0),
            inner_max: AtomicUsize::new(0),
        }
    }

    pub fn for_system(system: &SaddleSystem, velocity: VelocitySolve) -> Self {
        Self::new(velocity, system.m_p.clone())
    }

    fn dim_u(&self) -> usize {
        match &self.velocity {
            VelocitySolve::Exact(c) => c.dim(),
            VelocitySolve::Single(a) | VelocitySolve::Iterated { asmg: a, .. } => a.dim(),
        }
    }

    /// `(applications, total inner ASMG iterations, max inner ASMG iterations)`.
    pub fn inner_counts(&self) -> (usize, usize, usize) {
        (
            self.applications.load(Ordering::Relaxed),
            self.inner_total.load(Ordering::Relaxed),
            self.inner_max.load(Ordering::Relaxed),
        )
    }
}

impl Operator for BlockPreconditioner {
    fn dim(&self) -> usize {
        self.dim_u() + self.m_p.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let nu = self.dim_u();
        let (xu, xp) = x.split_at(nu);
        let (yu, yp) = y.split_at_mut(nu);
        self.applications.fetch_add(1, Ordering::Relaxed);
        match &self.velocity {
            VelocitySolve::Exact(c) => {
                yu.copy_from_slice(xu);
                c.solve_in_place(yu);
            }
            VelocitySolve::Single(a) => a.apply(xu, yu)?,
            VelocitySolve::Iterated { asmg, varpi, max_iter } => {
                yu.iter_mut().for_each(|v| *v = 0.0);
                let a = &asmg.hierarchy().levels.first().map(|l| &l.a).unwrap_or(&asmg.hierarchy().coarsest.a);
                let rep = gcg(
                    *a,
                    asmg.as_ref(),
                    xu,
                    yu,
                    GcgStop::Tolerance {
                        rel_tol: 1.0 / varpi,
                        max_iter: *max_iter,
                    },
                    0,
                )?;
                self.inner_total.fetch_add(rep.iterations, Ordering::Relaxed);
                self.inner_max.fetch_max(rep.iterations, Ordering::Relaxed);
            }
        }
        for ((o, i), m) in yp.iter_mut().zip(xp).zip(&self.m_p) {
            *o = i / m;
        }
        Ok(())
    }
}

/// Result of a mixed solve.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub report: IterationReport,
    /// `||b - K x|| / ||b||` recomputed from the returned solution
    /// (relative to `||K x_0 - b||` for zero right-hand sides).
    pub true_relative_residual: f64,
    pub wall_time: f64,
}

/// MinRes on the mixed system from the initial guess `x0` (zero if `None`).
pub fn solve_saddle(
    system: &SaddleSystem,
    precond: &BlockPreconditioner,
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<SaddleSolution> {
    let b = system.rhs();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; b.len()]);
    let r0 = norm2(&residual(system, &b, &x)?);
    let start = Instant::now();
    let report = minres(system, precond, &b, &mut x, rel_tol, max_iter)?;
    let wall_time = start.elapsed().as_secs_f64();
    let rn = norm2(&residual(system, &b, &x)?);
    let p = x.split_off(system.dim_u());
    Ok(SaddleSolution {
        u: x,
        p,
        report,
        true_relative_residual: if r0 > 0.0 { rn / r0 } else { 0.0 },
        wall_time,
    })
}
