use std::process::{Command, Output};

use asmg_core::coeff::load_raster;
use asmg_core::experiment::Report;

fn asmg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asmg"))
        .args(args)
        .env_remove("ASMG_THREADS")
        .output()
        .unwrap()
}

#[test]
fn run_writes_report_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = asmg(&[
        "run", "--case", "b", "--n", "32", "--levels", "3", "--q", "4", "--cycle", "V", "--m", "2", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = Report::load(&out).unwrap();
    assert_eq!(report.rows.len(), 1);
    let row = &report.rows[0];
    assert_eq!((row.n, row.levels, row.q, row.nu, row.m), (32, 3, 4, 1, 2));
    assert_eq!(row.converged, Some(true));
    assert!(row.iterations.unwrap() > 0);
    assert!(row.rho_r.unwrap() < 1.0);
    assert_eq!(row.nnz.0.len(), 4);
}

#[test]
fn report_goes_to_stdout_without_out() {
    let o = asmg(&["run", "--n", "16", "--levels", "2", "--q", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let report: Report = String::from_utf8(o.stdout).unwrap().parse().unwrap();
    assert_eq!(report.rows[0].n, 16);
}

#[test]
fn minres_reports_iteration_count() {
    let o = asmg(&["minres", "--n", "16", "--levels", "2", "--q", "4", "--cycle", "W", "--m", "1", "--varpi", "1e8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Report = String::from_utf8(o.stdout).unwrap().parse().unwrap();
    let row = &report.rows[0];
    assert_eq!(row.study.to_string(), "minres");
    assert!(row.iterations.unwrap() <= 30);
    assert!(row.relative_residual.unwrap() < 1e-7);
}

#[test]
fn diag_cpi() {
    let o = asmg(&["diag", "--cpi", "--n", "16", "--q", "6", "--levels", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let report: Report = String::from_utf8(o.stdout).unwrap().parse().unwrap();
    let c_pi = report.rows[0].c_pi.unwrap();
    assert!((1.0..3.0).contains(&c_pi), "{c_pi}");
    assert!(report.rows[0].complexity.is_none());
}

#[test]
fn gen_round_trips_through_case_c() {
    let dir = tempfile::tempdir().unwrap();
    let raster = dir.path().join("k.txt");
    let o = asmg(&["gen", "--case", "b", "--n", "16", "--q", "3", "--seed", "4", "--out", raster.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = load_raster(&raster).unwrap();
    assert_eq!((r.nx, r.ny), (16, 16));
    let o = asmg(&[
        "run", "--case", "c", "--coeff-file", raster.to_str().unwrap(), "--n", "16", "--levels", "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# small run\nn = 8\nlevels = 1\nq = 5\n").unwrap();
    let o = asmg(&["run", "--config", cfg.to_str().unwrap(), "--q", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let report: Report = String::from_utf8(o.stdout).unwrap().parse().unwrap();
    assert_eq!((report.rows[0].n, report.rows[0].q), (8, 1));
}

#[test]
fn non_convergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "max_iter = 1\ntol = 1e-14\n").unwrap();
    let o = asmg(&["run", "--config", cfg.to_str().unwrap(), "--n", "16", "--levels", "2", "--q", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let report: Report = String::from_utf8(o.stdout).unwrap().parse().unwrap();
    assert_eq!(report.rows[0].converged, Some(false));
}

#[test]
fn config_errors_exit_3() {
    for args in [
        &["run", "--n", "12"][..],
        &["run", "--cycle", "X"],
        &["run", "--unknown-flag"],
        &["minres", "--case", "c", "--n", "16", "--levels", "2"],
        &["run", "--n", "8", "--levels", "5"],
    ] {
        let o = asmg(args);
        assert_eq!(o.status.code(), Some(3), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = Command::new(env!("CARGO_BIN_EXE_asmg"))
        .args(["gen", "--n", "4"])
        .env("ASMG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn io_errors_exit_4() {
    let o = asmg(&["run", "--config", "/definitely/missing.cfg"]);
    assert_eq!(o.status.code(), Some(4));
    let o = asmg(&["gen", "--n", "4", "--out", "/definitely/missing/dir/k.txt"]);
    assert_eq!(o.status.code(), Some(4));
    let o = asmg(&["run", "--case", "c", "--coeff-file", "/definitely/missing.txt", "--n", "8", "--levels", "1"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn thread_cap_keeps_results() {
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_asmg"))
            .args(["run", "--n", "32", "--levels", "3", "--q", "3"])
            .env("ASMG_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let r: Report = String::from_utf8(o.stdout).unwrap().parse().unwrap();
        (r.rows[0].iterations, r.rows[0].relative_residual)
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn help_exits_0() {
    assert_eq!(asmg(&["--help"]).status.code(), Some(0));
    assert_eq!(asmg(&["run", "--help"]).status.code(), Some(0));
}
