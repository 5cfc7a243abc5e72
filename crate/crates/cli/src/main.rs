//! `asmg` command-line driver.
//!
//! Exit codes: 0 success, 2 non-convergence, 3 configuration error, 4 I/O error,
//! 1 any other failure.

use std::path::PathBuf;
use std::process::ExitCode;

use asmg_core::coeff::Raster;
use asmg_core::config::{ExperimentConfig, Study};
use asmg_core::experiment::{build_field, run_experiment, Report};
use asmg_core::AsmgError;
use clap::{Args, Parser, Subcommand};

const EXIT_NON_CONVERGENCE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "asmg", version, about = "Auxiliary space multigrid experiments for mixed Darcy flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the velocity system with the ASMG preconditioner alone.
    Run(CommonArgs),
    /// Solve the saddle-point system with block-diagonally preconditioned MinRes.
    Minres(CommonArgs),
    /// Compute diagnostics (c_Pi, rho_e, operator complexity, inf-sup constant).
    Diag {
        #[command(flatten)]
        common: CommonArgs,
        /// Estimate c_Pi on the finest level.
        #[arg(long)]
        cpi: bool,
        /// Estimate rho_e for the linear cycle.
        #[arg(long)]
        rho_e: bool,
        /// Report nnz per level and the operator complexity.
        #[arg(long)]
        complexity: bool,
        /// Compute the discrete inf-sup constant (small n only).
        #[arg(long)]
        inf_sup: bool,
    },
    /// Write the coefficient field as a permeability raster.
    Gen(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Key = value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coefficient case: a (binary islands), b (random islands), c (raster).
    #[arg(long)]
    case: Option<String>,
    /// Cells per side, a power of two.
    #[arg(long)]
    n: Option<String>,
    /// Number of levels.
    #[arg(long)]
    levels: Option<String>,
    /// Contrast exponent, contrast = 10^q.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// V or W.
    #[arg(long)]
    cycle: Option<String>,
    /// Smoothing steps.
    #[arg(long)]
    m: Option<String>,
    /// Inner iterations per coarse correction (1 = V, 2 = W).
    #[arg(long)]
    nu: Option<String>,
    /// Pressure block weight; 0 selects a single velocity cycle.
    #[arg(long)]
    varpi: Option<String>,
    /// Outer relative tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// Damping of the linear stationary iteration.
    #[arg(long)]
    tau: Option<String>,
    /// Permeability raster for case c.
    #[arg(long)]
    coeff_file: Option<PathBuf>,
    /// Constant source term of the pressure equation.
    #[arg(long)]
    rhs_c: Option<String>,
    /// Output path (report CSV, or raster for gen); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn to_config(&self, study: Study) -> asmg_core::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => std::fs::read_to_string(path)?.parse::<ExperimentConfig>()?,
            None => ExperimentConfig::default(),
        };
        cfg.study = study;
        let flags = [
            ("case", &self.case),
            ("n", &self.n),
            ("levels", &self.levels),
            ("q", &self.q),
            ("seed", &self.seed),
            ("cycle", &self.cycle),
            ("m", &self.m),
            ("nu", &self.nu),
            ("varpi", &self.varpi),
            ("tol", &self.tol),
            ("tau", &self.tau),
            ("rhs_c", &self.rhs_c),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(p) = &self.coeff_file {
            cfg.coeff_file = Some(p.clone());
        }
        if let Some(p) = &self.out {
            cfg.out = Some(p.clone());
        }
        Ok(cfg)
    }
}

fn exit_code(err: &AsmgError) -> u8 {
    match err {
        AsmgError::Config(_)
        | AsmgError::Parse { .. }
        | AsmgError::InvalidCoefficient(_)
        | AsmgError::Dimension { .. } => EXIT_CONFIG,
        AsmgError::Io(_) | AsmgError::Csv(_) => EXIT_IO,
        AsmgError::SolverStall { .. } | AsmgError::Breakdown { .. } | AsmgError::Factorization { .. } => {
            EXIT_NON_CONVERGENCE
        }
        AsmgError::Internal(_) => 1,
    }
}

fn configure_threads() -> asmg_core::Result<()> {
    let Ok(value) = std::env::var("ASMG_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| AsmgError::Config(format!("ASMG_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| AsmgError::Config(format!("cannot configure thread pool: {e}")))
}

fn write_output(path: Option<&PathBuf>, text: &str) -> asmg_core::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn generate(args: &CommonArgs) -> asmg_core::Result<u8> {
    let cfg = args.to_config(Study::Run)?;
    let raster = Raster::from_field(&build_field(&cfg)?);
    write_output(cfg.out.as_ref(), &raster.to_string())?;
    Ok(0)
}

fn experiment(cfg: ExperimentConfig) -> asmg_core::Result<u8> {
    let outcome = run_experiment(&cfg)?;
    let row = &outcome.row;
    if let Some(it) = row.iterations {
        eprintln!(
            "{}: {} iterations, rho_r {}, n_i max {}",
            row.id,
            it,
            row.rho_r.map_or("-".into(), |v| format!("{v:.4}")),
            row.n_i_max
        );
    }
    let report = Report {
        rows: vec![outcome.row.clone()],
    };
    write_output(cfg.out.as_ref(), &report.to_string())?;
    if outcome.converged {
        Ok(0)
    } else {
        eprintln!("solver did not reach tolerance {} within {} iterations", cfg.tol, cfg.max_iter);
        Ok(EXIT_NON_CONVERGENCE)
    }
}

fn dispatch(cli: Cli) -> asmg_core::Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Run(args) => experiment(args.to_config(Study::Run)?),
        Command::Minres(args) => experiment(args.to_config(Study::Minres)?),
        Command::Diag {
            common,
            cpi,
            rho_e,
            complexity,
            inf_sup,
        } => {
            let mut cfg = common.to_config(Study::Diag)?;
            cfg.cpi |= cpi;
            cfg.rho_e |= rho_e;
            cfg.complexity |= complexity;
            cfg.inf_sup |= inf_sup;
            experiment(cfg)
        }
        Command::Gen(args) => generate(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("asmg: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
