use std::path::Path;
use std::process::{Command, Output};

use porofem::analysis::ConvergenceTable;

fn porofem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_porofem"))
        .args(args)
        .current_dir(dir)
        .env_remove("POROFEM_DELTA")
        .env_remove("POROFEM_RES")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn converge2d_writes_reparseable_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = porofem(
        &[
            "converge2d",
            "--res",
            "4,8",
            "--delta",
            "1,10",
            "--threshold",
            "0",
            "--out",
            "tables",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["converge2d_delta_1.csv", "converge2d_delta_10.csv"] {
        let t = ConvergenceTable::read_csv(dir.path().join("tables").join(name)).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rates().unwrap().len(), 1);
    }
}

#[test]
fn threshold_failure_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = porofem(
        &[
            "converge2d",
            "--res",
            "2,4",
            "--delta",
            "1",
            "--threshold",
            "5",
            "--out",
            ".",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold"));
}

#[test]
fn invalid_arguments_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["converge2d", "--res", "0"],
        vec!["converge2d", "--res", "8,4"],
        vec!["converge2d", "--vtk-every", "0"],
        vec!["cantilever", "--bogus"],
        vec!["unconfined", "--res", "3"],
        vec!["run", "missing.toml"],
    ] {
        let o = porofem(&args, dir.path());
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn environment_overrides_defaults_and_flags_override_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_porofem"))
        .args(["converge2d", "--delta", "2", "--threshold", "0"])
        .current_dir(dir.path())
        .env("POROFEM_RES", "2,4")
        .env("POROFEM_DELTA", "7")
        .env("POROFEM_OUT", "envout")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = ConvergenceTable::read_csv(dir.path().join("envout/converge2d_delta_2.csv")).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(!dir.path().join("envout/converge2d_delta_7.csv").exists());
}

#[test]
fn cantilever_reports_both_indicators_and_writes_triangles() {
    let dir = tempfile::tempdir().unwrap();
    let o = porofem(&["cantilever", "--res", "8", "--out", "c"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("c/cantilever_report.csv")).unwrap();
    let rows: Vec<Vec<f64>> = report
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], 0.0);
    assert!(rows[1][1] < rows[0][1]);
    let vtk = std::fs::read_to_string(dir.path().join("c/cantilever_delta_0.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
    let types = vtk.split("CELL_TYPES").nth(1).unwrap();
    let types: Vec<&str> = types
        .lines()
        .skip(1)
        .take_while(|l| !l.starts_with("POINT_DATA"))
        .collect();
    assert_eq!(types.len(), 128);
    assert!(types.iter().all(|t| *t == "5"));
}

#[test]
fn unconfined_writes_curves_and_rmse() {
    let dir = tempfile::tempdir().unwrap();
    let o = porofem(
        &[
            "unconfined",
            "--res",
            "2,3",
            "--delta",
            "0.001",
            "--T",
            "1",
            "--out",
            "u",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rmse = std::fs::read_to_string(dir.path().join("u/unconfined_rmse.csv")).unwrap();
    let fields: Vec<&str> = rmse.lines().nth(1).unwrap().split(',').collect();
    let value: f64 = fields[1].parse().unwrap();
    assert!(value.is_finite() && value < 2e-3);
    let curve = std::fs::read_to_string(dir.path().join("u/unconfined_delta_0.001.csv")).unwrap();
    assert!(curve.starts_with("t,t_over_tg,u_over_a,armstrong"));
    assert_eq!(curve.lines().count(), 12);
}

const CUSTOM: &str = r#"
[run]
benchmark = "custom"
res = [4]
delta = [0.5]
dt = 0.05
T = 0.2
out = "results"
vtk_every = 2

[mesh]
generator = "square"

[material]
E = 10.0
nu = 0.3
kappa = 0.1

[boundary]
fixed = [1]
sealed = [1, 2]
traction_tags = [4]
traction = [0.0, -1.0, 0.0]
"#;

#[test]
fn custom_config_runs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("case.toml"), CUSTOM).unwrap();
    let o = porofem(&["run", "case.toml"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("results");
    let hist = std::fs::read_to_string(out.join("custom_delta_0.5_history.csv")).unwrap();
    assert_eq!(hist.lines().count(), 6);
    for step in [0, 2, 4] {
        assert!(out.join(format!("custom_delta_0.5_{step:05}.vtk")).exists());
    }
    let first = std::fs::read(out.join("custom_delta_0.5.vtk")).unwrap();
    let o = porofem(&["run", "case.toml"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(out.join("custom_delta_0.5.vtk")).unwrap(),
        first
    );
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("case.toml"), CUSTOM).unwrap();
    let o = porofem(
        &["run", "case.toml", "--delta", "2", "--T", "0.1"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let hist =
        std::fs::read_to_string(dir.path().join("results/custom_delta_2_history.csv")).unwrap();
    assert_eq!(hist.lines().count(), 4);
}

#[test]
fn unconstrained_problem_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CUSTOM.replace("fixed = [1]\n", "");
    std::fs::write(dir.path().join("free.toml"), cfg).unwrap();
    let o = porofem(&["run", "free.toml"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_config_keys_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "[run]\nbenchmark = \"custom\"\nspeed = 3\n",
    )
    .unwrap();
    let o = porofem(&["run", "bad.toml"], dir.path());
    assert_eq!(code(&o), 2);
    std::fs::write(
        dir.path().join("bad2.toml"),
        "[run]\nbenchmark = \"nope\"\n",
    )
    .unwrap();
    let o = porofem(&["run", "bad2.toml"], dir.path());
    assert_eq!(code(&o), 2);
}
