//! Experiment configuration in a flat `key = value` text format.
//!
//! Lines starting with `#` and blank lines are ignored. Unknown keys are
//! errors. Every key is optional in a file; missing keys keep their defaults.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `study` | `run`, `minres` or `diag` | `run` |
//! | `case` | coefficient case `a`, `b` or `c` | `b` |
//! | `n` | cells per side (power of two) | 64 |
//! | `levels` | number of coarsenings | 4 |
//! | `q` | contrast exponent | 3 |
//! | `seed` | seed for fields and initial guesses | 1 |
//! | `nu` | inner GCG iterations, 1 = V-cycle, 2 = W-cycle | 1 |
//! | `m` | Gauss-Seidel sweeps | 0 |
//! | `stabilization` | `gcg` or `linear` | `gcg` |
//! | `varpi` | inner ASMG residual reduction in MinRes, 0 = one application | 1e8 |
//! | `tol` | outer relative residual target | 1e-8 |
//! | `max_iter` | outer iteration cap | 200 |
//! | `inner_tol` | PCG tolerance for `D` solves | 1e-6 |
//! | `inner_max_iter` | PCG iteration cap for `D` solves | 200 |
//! | `tau` | stationary relaxation | 1 |
//! | `rhs_c` | constant of the source term, 0 = zero source | 0 |
//! | `sub_cells` | subdomain width in cells | 8 |
//! | `coarsest_n` | cells per side of the coarsest grid | 4 |
//! | `coeff_file` | raster path for case `c` | none |
//! | `out` | report path | none |
//! | `cpi`, `rho_e`, `complexity`, `inf_sup` | diagnostics to compute | `false` |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::asca::HierarchyConfig;
use crate::error::{AsmgError, Result};
use crate::precond::{AmliConfig, Smoother, Stabilization};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    /// Standalone ASMG iteration on the weighted H(div) system.
    Run,
    /// MinRes on the mixed system.
    Minres,
    /// Diagnostics only.
    Diag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// Binary islands.
    A,
    /// Islands on a random background.
    B,
    /// Raster input.
    C,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($var:path => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($var => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = AsmgError;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($var),)+
                    other => Err(AsmgError::Config(format!(
                        concat!("unknown ", $what, " '{}', expected one of: ", $($name, " "),+),
                        other
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Study, "study", Study::Run => "run", Study::Minres => "minres", Study::Diag => "diag");
keyword_enum!(Case, "case", Case::A => "a", Case::B => "b", Case::C => "c");
keyword_enum!(Stabilization, "stabilization", Stabilization::Gcg => "gcg", Stabilization::Linear => "linear");

/// Parses `V`/`W` into the cycle index.
pub fn parse_cycle(s: &str) -> Result<usize> {
    match s.trim().to_ascii_uppercase().as_str() {
        "V" => Ok(1),
        "W" => Ok(2),
        other => Err(AsmgError::Config(format!("unknown cycle '{other}', expected V or W"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub study: Study,
    pub case: Case,
    pub n: usize,
    pub levels: usize,
    pub q: u32,
    pub seed: u64,
    pub nu: usize,
    pub m: usize,
    pub stabilization: Stabilization,
    pub varpi: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub tau: f64,
    pub rhs_c: f64,
    pub sub_cells: usize,
    pub coarsest_n: usize,
    pub coeff_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub cpi: bool,
    pub rho_e: bool,
    pub complexity: bool,
    pub inf_sup: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            study: Study::Run,
            case: Case::B,
            n: 64,
            levels: 4,
            q: 3,
            seed: 1,
            nu: 1,
            m: 0,
            stabilization: Stabilization::Gcg,
            varpi: 1e8,
            tol: 1e-8,
            max_iter: 200,
            inner_tol: 1e-6,
            inner_max_iter: 200,
            tau: 1.0,
            rhs_c: 0.0,
            sub_cells: 8,
            coarsest_n: 4,
            coeff_file: None,
            out: None,
            cpi: false,
            rho_e: false,
            complexity: false,
            inf_sup: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| AsmgError::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(AsmgError::Config(format!("invalid boolean '{value}' for '{key}'"))),
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "study" => self.study = v.parse()?,
            "case" => self.case = v.parse()?,
            "n" => self.n = parse_num(key, v)?,
            "levels" => self.levels = parse_num(key, v)?,
            "q" => self.q = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "nu" => self.nu = parse_num(key, v)?,
            "cycle" => self.nu = parse_cycle(v)?,
            "m" => self.m = parse_num(key, v)?,
            "stabilization" => self.stabilization = v.parse()?,
            "varpi" => self.varpi = parse_num(key, v)?,
            "tol" => self.tol = parse_num(key, v)?,
            "max_iter" => self.max_iter = parse_num(key, v)?,
            "inner_tol" => self.inner_tol = parse_num(key, v)?,
            "inner_max_iter" => self.inner_max_iter = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "rhs_c" => self.rhs_c = parse_num(key, v)?,
            "sub_cells" => self.sub_cells = parse_num(key, v)?,
            "coarsest_n" => self.coarsest_n = parse_num(key, v)?,
            "coeff_file" => self.coeff_file = (!v.is_empty()).then(|| PathBuf::from(v)),
            "out" => self.out = (!v.is_empty()).then(|| PathBuf::from(v)),
            "cpi" => self.cpi = parse_bool(key, v)?,
            "rho_e" => self.rho_e = parse_bool(key, v)?,
            "complexity" => self.complexity = parse_bool(key, v)?,
            "inf_sup" => self.inf_sup = parse_bool(key, v)?,
            other => return Err(AsmgError::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(AsmgError::Config(format!("n must be a power of two >= 2, got {}", self.n)));
        }
        if self.q > 16 {
            return Err(AsmgError::Config(format!("contrast exponent q must be <= 16, got {}", self.q)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(AsmgError::Config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(AsmgError::Config("max_iter must be positive".into()));
        }
        if !(self.varpi == 0.0 || self.varpi > 1.0) {
            return Err(AsmgError::Config(format!("varpi must be 0 or > 1, got {}", self.varpi)));
        }
        if !self.rhs_c.is_finite() {
            return Err(AsmgError::Config("rhs_c must be finite".into()));
        }
        if self.case == Case::C && self.coeff_file.is_none() {
            return Err(AsmgError::Config("case c needs a coefficient raster (coeff_file)".into()));
        }
        self.hierarchy().validate(self.n)?;
        self.amli().validate()
    }

    pub fn hierarchy(&self) -> HierarchyConfig {
        HierarchyConfig {
            levels: self.levels,
            sub_cells: self.sub_cells,
            coarsest_n: self.coarsest_n,
        }
    }

    pub fn amli(&self) -> AmliConfig {
        AmliConfig {
            nu: self.nu,
            smoother: Smoother::gauss_seidel(self.m),
            inner_tol: self.inner_tol,
            inner_max_iter: self.inner_max_iter,
            tau: self.tau,
            stabilization: self.stabilization,
            exact_d: false,
        }
    }

    /// Short identifier used as the report's experiment id.
    pub fn id(&self) -> String {
        format!(
            "{}-{}-n{}-l{}-q{}-nu{}-m{}-s{}",
            self.study, self.case, self.n, self.levels, self.q, self.nu, self.m, self.seed
        )
    }
}

impl FromStr for ExperimentConfig {
    type Err = AsmgError;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| AsmgError::Parse {
                line: k + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            cfg.set(key, value).map_err(|e| AsmgError::Parse {
                line: k + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        writeln!(f, "study = {}", self.study)?;
        writeln!(f, "case = {}", self.case)?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "levels = {}", self.levels)?;
        writeln!(f, "q = {}", self.q)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "nu = {}", self.nu)?;
        writeln!(f, "m = {}", self.m)?;
        writeln!(f, "stabilization = {}", self.stabilization)?;
        writeln!(f, "varpi = {:e}", self.varpi)?;
        writeln!(f, "tol = {:e}", self.tol)?;
        writeln!(f, "max_iter = {}", self.max_iter)?;
        writeln!(f, "inner_tol = {:e}", self.inner_tol)?;
        writeln!(f, "inner_max_iter = {}", self.inner_max_iter)?;
        writeln!(f, "tau = {:e}", self.tau)?;
        writeln!(f, "rhs_c = {:e}", self.rhs_c)?;
        writeln!(f, "sub_cells = {}", self.sub_cells)?;
        writeln!(f, "coarsest_n = {}", self.coarsest_n)?;
        writeln!(f, "coeff_file = {}", path(&self.coeff_file))?;
        writeln!(f, "out = {}", path(&self.out))?;
        writeln!(f, "cpi = {}", self.cpi)?;
        writeln!(f, "rho_e = {}", self.rho_e)?;
        writeln!(f, "complexity = {}", self.complexity)?;
        writeln!(f, "inf_sup = {}", self.inf_sup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_comments_and_cycle() {
        let cfg: ExperimentConfig = "# a comment\n\nstudy = minres\ncycle = W\nq=6\ncoeff_file = x.txt\n".parse().unwrap();
        assert_eq!(cfg.study, Study::Minres);
        assert_eq!(cfg.nu, 2);
        assert_eq!(cfg.q, 6);
        assert_eq!(cfg.coeff_file, Some(PathBuf::from("x.txt")));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = "n = 8\nbogus = 1\n".parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(err, AsmgError::Parse { line: 2, .. }), "{err}");
        let err = "n = 8\nnot a pair\n".parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(err, AsmgError::Parse { line: 2, .. }));
        assert!("n = x".parse::<ExperimentConfig>().is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let bad = [
            ExperimentConfig { n: 48, ..Default::default() },
            ExperimentConfig { tol: 2.0, ..Default::default() },
            ExperimentConfig { nu: 0, ..Default::default() },
            ExperimentConfig { case: Case::C, ..Default::default() },
            ExperimentConfig { levels: 5, ..Default::default() },
            ExperimentConfig { varpi: 0.5, ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(AsmgError::Config(_))), "{c:?}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(
            study in prop_oneof![Just(Study::Run), Just(Study::Minres), Just(Study::Diag)],
            case in prop_oneof![Just(Case::A), Just(Case::B), Just(Case::C)],
            n_exp in 1u32..10, levels in 0usize..6, q in 0u32..10, seed in any::<u64>(),
            nu in 1usize..4, m in 0usize..4, linear in any::<bool>(),
            varpi in 1.0f64..1e12, tol in 1e-14f64..0.9, tau in 1.0f64..10.0, rhs_c in -1e3f64..1e3,
            file in proptest::option::of("[a-z][a-z0-9_./]{0,12}"),
            flags in any::<[bool; 4]>(),
        ) {
            let cfg = ExperimentConfig {
                study, case, n: 1 << n_exp, levels, q, seed, nu, m,
                stabilization: if linear { Stabilization::Linear } else { Stabilization::Gcg },
                varpi, tol, tau, rhs_c,
                coeff_file: file.clone().map(PathBuf::from),
                out: file.map(PathBuf::from),
                cpi: flags[0], rho_e: flags[1], complexity: flags[2], inf_sup: flags[3],
                ..Default::default()
            };
            let back: ExperimentConfig = cfg.to_string().parse().unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
