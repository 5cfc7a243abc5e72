//! Browser bindings for the ASMG demo page.
//!
//! The plain Rust functions carry the logic and are tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors for JavaScript.

use asmg_core::config::{Case, ExperimentConfig};
use asmg_core::diag::{estimate_c_pi, DENSE_CPI_CAP};
use asmg_core::experiment::{build_field, random_vector};
use asmg_core::mesh::Grid;
use asmg_core::precond::{gcg, Asmg, GcgStop};
use asmg_core::{asca::build_hierarchy, AsmgError};
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; keeps a solve well under a second.
pub const MAX_N: usize = 128;

/// Settings shared by the demo operations.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoParams {
    /// `false` selects binary islands, `true` random islands.
    pub random: bool,
    pub n: usize,
    pub levels: usize,
    pub q: u32,
    pub seed: u32,
    /// 1 for a V-cycle, 2 for a W-cycle.
    pub nu: usize,
    pub m: usize,
}

#[wasm_bindgen]
impl DemoParams {
    #[wasm_bindgen(constructor)]
    pub fn new(random: bool, n: usize, levels: usize, q: u32, seed: u32, nu: usize, m: usize) -> Self {
        Self {
            random,
            n,
            levels,
            q,
            seed,
            nu,
            m,
        }
    }
}

impl DemoParams {
    fn config(&self) -> asmg_core::Result<ExperimentConfig> {
        if self.n > MAX_N {
            return Err(AsmgError::Config(format!("the demo is limited to n <= {MAX_N}")));
        }
        let cfg = ExperimentConfig {
            case: if self.random { Case::B } else { Case::A },
            n: self.n,
            levels: self.levels,
            q: self.q,
            seed: u64::from(self.seed),
            nu: self.nu,
            m: self.m,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `log10` of the permeability per cell, row-major from the bottom-left.
pub fn log_permeability(p: &DemoParams) -> asmg_core::Result<Vec<f64>> {
    let field = build_field(&p.config()?)?;
    Ok(field.permeability().iter().map(|k| k.log10()).collect())
}

/// Relative residual norms of the ASMG-preconditioned GCG solve of the
/// velocity system with zero right-hand side and a random start.
pub fn residual_history(p: &DemoParams, tol: f64) -> asmg_core::Result<Vec<f64>> {
    let mut cfg = p.config()?;
    cfg.tol = tol;
    cfg.validate()?;
    let field = build_field(&cfg)?;
    let hierarchy = build_hierarchy(&Grid::new(cfg.n)?, &field, cfg.hierarchy())?;
    let asmg = Asmg::new(hierarchy, cfg.amli())?;
    let a = asmg.hierarchy().matrix(0);
    let b = vec![0.0; a.nrows()];
    let mut x = random_vector(a.nrows(), cfg.seed);
    let stop = GcgStop::Tolerance {
        rel_tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let rep = gcg(a, &asmg, &b, &mut x, stop, 0)?;
    let r0 = rep.residuals[0];
    Ok(rep.residuals.iter().map(|r| r / r0).collect())
}

/// `c_Pi` of the finest level.
pub fn c_pi(p: &DemoParams) -> asmg_core::Result<f64> {
    let cfg = ExperimentConfig {
        levels: 1,
        ..p.config()?
    };
    cfg.validate()?;
    let field = build_field(&cfg)?;
    let hierarchy = build_hierarchy(&Grid::new(cfg.n)?, &field, cfg.hierarchy())?;
    Ok(estimate_c_pi(&hierarchy.levels[0], DENSE_CPI_CAP)?.c_pi)
}

fn js(err: AsmgError) -> JsError {
    JsError::new(&err.to_string())
}

#[wasm_bindgen(js_name = logPermeability)]
pub fn log_permeability_js(p: &DemoParams) -> Result<Vec<f64>, JsError> {
    log_permeability(p).map_err(js)
}

#[wasm_bindgen(js_name = residualHistory)]
pub fn residual_history_js(p: &DemoParams, tol: f64) -> Result<Vec<f64>, JsError> {
    residual_history(p, tol).map_err(js)
}

#[wasm_bindgen(js_name = cPi)]
pub fn c_pi_js(p: &DemoParams) -> Result<f64, JsError> {
    c_pi(p).map_err(js)
}
