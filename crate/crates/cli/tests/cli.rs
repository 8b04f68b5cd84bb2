use std::fs;
use std::process::{Command, Output};

fn qdephase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdephase")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn entanglement_sweep_csv_layout() {
    let out = qdephase(&["sweep-entanglement", "--family", "rho_eta", "--params", "eta=0.9", "--t-grid", "0:1:3", "--deterministic"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!(csv.starts_with("# generator=qdephase sweep-entanglement\n"));
    assert!(csv.contains("# state=rho_eta eta=0.9\n"));
    assert!(!csv.contains("timestamp_unix"));
    let lines = data_lines(&csv);
    assert_eq!(lines[0], "t,E,N_A|BC,N_AC|B,N_AB|C,state_change_norm");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0.0000000000000000e0,"));
    assert!(csv.contains("# invariant=false\n"));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}.csv"))).collect();
    for path in &paths {
        let out = qdephase(&[
            "sweep-entanglement", "--family", "rho_alpha_beta", "--params", "alpha=0.9,beta=0.85",
            "--t-grid", "0:2:3", "--deterministic", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = fs::read(&paths[0]).unwrap();
    assert_eq!(first, fs::read(&paths[1]).unwrap());
    assert!(String::from_utf8(first).unwrap().contains("# invariant=true\n"));
}

#[test]
fn sequential_job_count_matches_default() {
    let base = ["sweep-entanglement", "--family", "rho_ab", "--params", "a=1,b=0.75", "--t-grid", "0:1:4", "--deterministic"];
    let parallel = qdephase(&base);
    let sequential = qdephase(&[&base[..], &["--jobs", "1"]].concat());
    assert_eq!(parallel.stdout, sequential.stdout);
}

#[test]
fn bell_sweep_reports_sudden_death() {
    let out = qdephase(&[
        "sweep-bell", "--family", "rho_alpha_beta", "--params", "alpha=0.9,beta=0.8",
        "--model", "analytic", "--t-grid", "0:2:5", "--deterministic",
    ]);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert_eq!(data_lines(&csv)[0], "t,bell_expectation,is_genuinely_nonlocal");
    assert!(csv.contains("# sudden_death_time=at:1.12160"), "{csv}");
}

#[test]
fn dfs_state_is_unchanged_by_evolution() {
    let at0 = qdephase(&["evolve", "--family", "rho_alpha_beta", "--params", "alpha=0,beta=1", "--t", "0"]);
    let at3 = qdephase(&["evolve", "--family", "rho_alpha_beta", "--params", "alpha=0,beta=1", "--t", "3"]);
    let a: serde_json::Value = serde_json::from_slice(&at0.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&at3.stdout).unwrap();
    assert_eq!(a["state"], b["state"]);
}

#[test]
fn witness_json_carries_certificates() {
    let out = qdephase(&["witness", "--family", "rho_eta", "--params", "eta=0", "--t", "0"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let e = json["E"].as_f64().unwrap();
    assert!((e - 0.5).abs() < 1e-6, "{json}");
    assert_eq!(json["certificates_passed"], true);
    assert_eq!(json["summary"], "genuine multipartite entanglement detected");
}

#[test]
fn invalid_configuration_exits_with_2() {
    for args in [
        &["evolve", "--family", "rho_eta", "--params", "eta=2"][..],
        &["evolve", "--family", "nope"][..],
        &["invariance-scan", "--samples", "0"][..],
        &["sweep-entanglement", "--family", "rho_eta", "--params", "eta=0.5", "--t-grid", "3:1:4"][..],
        &["evolve", "--family", "rho_eta", "--params", "eta=0.5", "--orientation", "0,0,0"][..],
    ] {
        let out = qdephase(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn numerical_failure_exits_with_3_after_writing_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("phi.json");
    fs::write(&table, "[[0,1,0],[1,1,0],[2,0,0]]").unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = qdephase(&[
        "sweep-entanglement", "--family", "rho_ab", "--params", "a=1,b=0.75",
        "--spectrum", &format!("table:{}", table.display()), "--t-grid", "0:1:3",
        "--deterministic", "--out", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.contains("# error at t=1"));
    assert!(csv.trim_end().ends_with("FAILED,,,"));
}

#[test]
fn plot_script_references_csv() {
    let out = qdephase(&["emit-plot-script", "--csv", "sweep.csv", "--kind", "entanglement"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("sweep.csv"));
}
