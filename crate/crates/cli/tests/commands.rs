use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn projfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projfem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn minimal_run_writes_three_time_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = projfem(&[
        "run",
        "--n",
        "4",
        "--k",
        "0.2",
        "--T",
        "0.4",
        "--scheme",
        "incremental",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 1 + 3);
    let invariants = fs::read_to_string(dir.path().join("invariants.csv")).unwrap();
    assert_eq!(invariants.lines().count(), 1 + 2);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("scheme,pair,n,k,norm,value,order\n"));
    assert_eq!(summary.lines().count(), 7);
}

#[test]
fn unknown_scheme_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = projfem(&["run", "--scheme", "chorin", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scheme"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(projfem(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(projfem(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(projfem(&["run", "--n", "four"]).status.code(), Some(2));
}

#[test]
fn vtk_stride_selects_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n = 4\nk = 0.1\nT = 1.0\nvtk_every = 2\n").unwrap();
    let out = projfem(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--vtk",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut names: Vec<String> = fs::read_dir(dir.path().join("vtk"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let expected: Vec<String> = (0..=10)
        .step_by(2)
        .map(|m| format!("step_{m:05}.vtk"))
        .collect();
    assert_eq!(names, expected);
    let first = fs::read_to_string(dir.path().join("vtk/step_00000.vtk")).unwrap();
    assert!(first.starts_with("# vtk DataFile Version 2.0\n"));
    assert!(first.contains("VECTORS velocity double"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "n = 3\nk = 0.2\nT = 0.4\nformat = csv\nscheme = penalty\n",
    )
    .unwrap();
    let out = projfem(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--scheme",
        "rotational",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout
            .lines()
            .skip(1)
            .all(|l| l.starts_with("rotational,th,3,0.2,")),
        "{stdout}"
    );
}

#[test]
fn missing_config_file_is_reported() {
    let out = projfem(&["run", "--config", "/nonexistent/projfem.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convergence_rejects_non_dividing_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = projfem(&[
        "convergence",
        "--n",
        "4",
        "--T",
        "2",
        "--ks",
        "0.2,0.15",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not divide"));
}

#[test]
fn convergence_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = projfem(&[
        "convergence",
        "--n",
        "4",
        "--T",
        "0.4",
        "--ks",
        "0.2,0.1,0.05",
        "--pair",
        "mini",
        "--workers",
        "2",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 6 + 2 * 6);
    assert!(csv.contains("incremental,mini,4,0.1-0.05,p_linf_l2,,"));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("Error orders in time"));
    assert!(table.contains("0.2-0.1"));
}

#[test]
fn compare_reports_costs() {
    let dir = tempfile::tempdir().unwrap();
    let out = projfem(&[
        "compare",
        "--n",
        "4",
        "--k",
        "0.1",
        "--T",
        "0.2",
        "--schemes",
        "incremental,rotational,consistent,penalty",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let timing = fs::read_to_string(dir.path().join("compare_timing.csv")).unwrap();
    let lines: Vec<&str> = timing.lines().collect();
    assert_eq!(
        lines[0],
        "scheme,steps,assembly_s,solve_s,total_s,relative_cost"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("incremental,2,") && lines[1].ends_with(",1.000"));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("CPU time (s)") && table.contains("penalty"));
}

#[test]
fn compare_needs_two_schemes() {
    let out = projfem(&["compare", "--n", "4", "--schemes", "incremental"]);
    assert_eq!(out.status.code(), Some(2));
}
