//! Experiment runner and the CSV report format.
//!
//! A report file starts with the line `# asmg-report v1` followed by a CSV
//! table with one row per run. Empty fields mean "not computed".

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::asca::{build_hierarchy, Hierarchy};
use crate::coeff::{gen_binary_islands, gen_random_field, load_raster, CoefficientField, IslandLayout};
use crate::config::{Case, ExperimentConfig, Study};
use crate::diag::{estimate_c_pi, estimate_rho_e, inf_sup_constant, operator_complexity, rho_r, DENSE_CPI_CAP};
use crate::error::{AsmgError, Result};
use crate::linalg::Operator;
use crate::mesh::{assemble_rhs, assemble_saddle, Grid};
use crate::precond::{gcg, AmliConfig, Asmg, GcgStop, Stabilization};
use crate::solvers::{solve_saddle, stationary, BlockPreconditioner, VelocitySolve};

pub const REPORT_HEADER: &str = "# asmg-report v1";

/// Largest grid for which the dense inf-sup computation is allowed.
pub const INF_SUP_MAX_N: usize = 32;

/// Nonzeros per level, written as `a;b;c`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NnzList(pub Vec<usize>);

impl Serialize for NnzList {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        s.serialize_str(&parts.join(";"))
    }
}

impl<'de> Deserialize<'de> for NnzList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Ok(Self::default());
        }
        s.split(';')
            .map(|p| p.parse().map_err(serde::de::Error::custom))
            .collect::<std::result::Result<_, _>>()
            .map(Self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub study: String,
    pub case: String,
    pub n: usize,
    pub levels: usize,
    pub q: u32,
    pub seed: u64,
    pub nu: usize,
    pub m: usize,
    pub dofs: usize,
    /// `n_ASMG` for `run`, `n_MinRes` for `minres`.
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub rho_r: Option<f64>,
    /// True relative residual of the returned solution.
    pub relative_residual: Option<f64>,
    /// Largest number of inner ASMG iterations per MinRes step.
    pub n_asmg_max: Option<usize>,
    /// Largest number of PCG iterations in a `D` solve.
    pub n_i_max: usize,
    pub c_pi: Option<f64>,
    pub rho_e: Option<f64>,
    pub complexity: Option<f64>,
    pub inf_sup: Option<f64>,
    pub nnz: NnzList,
    pub build_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{REPORT_HEADER}")?;
        let mut csv = csv::Writer::from_writer(w);
        for row in &self.rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        text.parse()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

impl FromStr for Report {
    type Err = AsmgError;

    fn from_str(text: &str) -> Result<Self> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        if first.trim_end() != REPORT_HEADER {
            return Err(AsmgError::Parse {
                line: 1,
                message: format!("expected '{REPORT_HEADER}'"),
            });
        }
        let mut csv = csv::Reader::from_reader(rest.as_bytes());
        let rows = csv.deserialize().collect::<std::result::Result<_, _>>()?;
        Ok(Self { rows })
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub row: ReportRow,
    /// False when the solve hit its iteration cap.
    pub converged: bool,
}

/// The coefficient field selected by the configuration.
pub fn build_field(cfg: &ExperimentConfig) -> Result<CoefficientField> {
    let layout = IslandLayout::default();
    match cfg.case {
        Case::A => gen_binary_islands(cfg.n, cfg.q, &layout),
        Case::B => gen_random_field(cfg.n, cfg.q, cfg.seed, &layout),
        Case::C => {
            let path = cfg
                .coeff_file
                .as_ref()
                .ok_or_else(|| AsmgError::Config("case c needs a coefficient raster (coeff_file)".into()))?;
            load_raster(path)?.resample(cfg.n)
        }
    }
}

/// Seeded random vector in `[-1, 1]^n`, drawn from a stream separate from the field's.
pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn base_row(cfg: &ExperimentConfig, dofs: usize, h: &Hierarchy) -> ReportRow {
    ReportRow {
        id: cfg.id(),
        study: cfg.study.to_string(),
        case: cfg.case.to_string(),
        n: cfg.n,
        levels: cfg.levels,
        q: cfg.q,
        seed: cfg.seed,
        nu: cfg.nu,
        m: cfg.m,
        dofs,
        iterations: None,
        converged: None,
        rho_r: None,
        relative_residual: None,
        n_asmg_max: None,
        n_i_max: 0,
        c_pi: None,
        rho_e: None,
        complexity: None,
        inf_sup: None,
        nnz: NnzList(h.nnz_per_level()),
        build_seconds: 0.0,
        solve_seconds: 0.0,
    }
}

/// Builds the field, system and hierarchy, runs the configured study and
/// any requested diagnostics.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let field = build_field(cfg)?;
    let grid = Grid::new(cfg.n)?;

    let t_build = Instant::now();
    let hierarchy = build_hierarchy(&grid, &field, cfg.hierarchy())?;
    let asmg = Arc::new(Asmg::new(hierarchy, cfg.amli())?);
    let build_seconds = t_build.elapsed().as_secs_f64();

    let dim_u = asmg.dim();
    let mut row = base_row(cfg, dim_u, asmg.hierarchy());
    row.build_seconds = build_seconds;

    // warm-up application, excluded from timing and statistics
    let mut scratch = vec![0.0; dim_u];
    asmg.apply(&random_vector(dim_u, cfg.seed.wrapping_add(1)), &mut scratch)?;
    asmg.reset_stats();

    let mut converged = true;
    match cfg.study {
        Study::Run => {
            let a = &asmg.hierarchy().matrix(0).clone();
            let b = vec![0.0; dim_u];
            let mut x = random_vector(dim_u, cfg.seed);
            let start = Instant::now();
            let residuals = match cfg.stabilization {
                Stabilization::Gcg => {
                    let stop = GcgStop::Tolerance {
                        rel_tol: cfg.tol,
                        max_iter: cfg.max_iter,
                    };
                    let rep = gcg(a, asmg.as_ref(), &b, &mut x, stop, 0)?;
                    converged = rep.converged;
                    rep.residuals
                }
                Stabilization::Linear => {
                    let rep = stationary(a, asmg.as_ref(), &b, &mut x, cfg.tau, None, cfg.tol, cfg.max_iter)?;
                    converged = rep.converged;
                    rep.residuals
                }
            };
            row.solve_seconds = start.elapsed().as_secs_f64();
            row.iterations = Some(residuals.len() - 1);
            row.converged = Some(converged);
            row.rho_r = rho_r(&residuals).ok();
            row.relative_residual = Some(residuals[residuals.len() - 1] / residuals[0]);
        }
        Study::Minres => {
            let mut system = assemble_saddle(&grid, &field)?;
            if cfg.rhs_c != 0.0 {
                system.set_source(&assemble_rhs(&grid, cfg.rhs_c))?;
            }
            let velocity = if cfg.varpi == 0.0 {
                VelocitySolve::Single(asmg.clone())
            } else {
                VelocitySolve::Iterated {
                    asmg: asmg.clone(),
                    varpi: cfg.varpi,
                    max_iter: cfg.max_iter,
                }
            };
            let precond = BlockPreconditioner::for_system(&system, velocity);
            // a zero source needs a nonzero start to have anything to solve
            let x0 = (cfg.rhs_c == 0.0).then(|| random_vector(system.dim_u() + system.dim_p(), cfg.seed));
            let sol = solve_saddle(&system, &precond, x0.as_deref(), cfg.tol, cfg.max_iter)?;
            converged = sol.report.converged;
            row.dofs = system.dim_u() + system.dim_p();
            row.solve_seconds = sol.wall_time;
            row.iterations = Some(sol.report.iterations);
            row.converged = Some(converged);
            row.rho_r = rho_r(&sol.report.residuals).ok();
            row.relative_residual = Some(sol.true_relative_residual);
            row.n_asmg_max = Some(precond.inner_counts().2);
        }
        Study::Diag => {}
    }
    row.n_i_max = asmg.stats().max_iterations;

    let any_flag = cfg.cpi || cfg.rho_e || cfg.complexity || cfg.inf_sup;
    let want = |flag: bool| flag || (cfg.study == Study::Diag && !any_flag);
    if want(cfg.cpi) {
        let level = asmg
            .hierarchy()
            .levels
            .first()
            .ok_or_else(|| AsmgError::Config("c_Pi needs at least one coarsening (levels >= 1)".into()))?;
        row.c_pi = Some(estimate_c_pi(level, DENSE_CPI_CAP)?.c_pi);
    }
    if want(cfg.complexity) {
        row.complexity = Some(operator_complexity(asmg.hierarchy()).ratio);
    }
    if cfg.rho_e {
        row.rho_e = Some(linear_rho_e(cfg, &grid, &field)?);
    }
    if cfg.inf_sup {
        if cfg.n > INF_SUP_MAX_N {
            return Err(AsmgError::Config(format!(
                "the dense inf-sup check is limited to n <= {INF_SUP_MAX_N}"
            )));
        }
        row.inf_sup = Some(inf_sup_constant(&assemble_saddle(&grid, &field)?)?);
    }
    Ok(ExperimentOutcome { row, converged })
}

/// Inner tolerance used when the cycle must act as a fixed linear operator.
pub const LINEAR_INNER_TOL: f64 = 1e-10;

/// `rho_e` of the linear cycle (`p(t) = 1 - t`) with the configured smoothing.
pub fn linear_rho_e(cfg: &ExperimentConfig, grid: &Grid, field: &CoefficientField) -> Result<f64> {
    let h = build_hierarchy(grid, field, cfg.hierarchy())?;
    let a = h.matrix(0).clone();
    let linear = AmliConfig {
        stabilization: Stabilization::Linear,
        inner_tol: cfg.inner_tol.min(LINEAR_INNER_TOL),
        inner_max_iter: cfg.inner_max_iter.max(1000),
        ..cfg.amli()
    };
    let p = Asmg::new(h, linear)?;
    Ok(estimate_rho_e(&a, &p, cfg.seed, 200)?.rho_e)
}
