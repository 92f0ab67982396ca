//! End-to-end runs of the `ucusum` binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use ucusum::{Study, TestReport, TheoryReport};

fn ucusum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucusum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Deterministic series with a scale change at the midpoint.
fn scale_change_csv(n: usize) -> String {
    let mut s = String::from("value\n");
    for i in 0..n {
        let base = ((i * 7919) % 101) as f64 / 50.0 - 1.0;
        let scale = if i < n / 2 { 1.0 } else { 4.0 };
        s.push_str(&format!("{}\n", base * scale));
    }
    s
}

#[test]
fn test_reports_both_methods_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.csv", &scale_change_csv(80));
    let out = ucusum(&["test", "--input", &input]);
    assert!(out.status.success(), "{}", stderr(&out));
    let reports: Vec<TestReport> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].method.short(), "FvsF");
    assert_eq!(reports[1].method.short(), "FvsL");
    assert!(reports[0].p_value < 0.05);
    let again = serde_json::to_string_pretty(&reports).unwrap();
    assert_eq!(again.trim(), String::from_utf8_lossy(&out.stdout).trim());

    let second = ucusum(&["test", "--input", &input]);
    assert_eq!(out.stdout, second.stdout);
}

#[test]
fn single_method_and_options() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.csv", &scale_change_csv(80));
    let out = ucusum(&[
        "test",
        "--input",
        &input,
        "--method",
        "fvl",
        "--bandwidth",
        "2",
        "--variant",
        "half_lag_zero",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: TestReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.method.short(), "FvsL");
    assert!((2..=78).contains(&report.k_hat));

    let text = ucusum(&["test", "--input", &input, "--text"]);
    let body = String::from_utf8(text.stdout).unwrap();
    assert!(body.contains("first_vs_full") && body.contains("p-value"));
}

#[test]
fn kendall_reads_two_columns() {
    let dir = TempDir::new().unwrap();
    let mut body = String::from("x,y\n");
    for i in 0..60 {
        let x = ((i * 37) % 61) as f64;
        let y = if i < 30 { x } else { -x };
        body.push_str(&format!("{x},{y}\n"));
    }
    let input = write(&dir, "pairs.csv", &body);
    let out = ucusum(&["test", "--input", &input, "--kernel", "kendall"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let reports: Vec<TestReport> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.kernel == "kendall" && r.n == 60));
}

#[test]
fn data_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.csv", "");
    let out = ucusum(&["test", "--input", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no observations"), "{}", stderr(&out));

    let bad = write(&dir, "bad.csv", "value\n1.0\n2.0\n3,5\n");
    let out = ucusum(&["test", "--input", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    let wide = write(&dir, "wide.csv", "1,2\n3,4\n");
    let out = ucusum(&["test", "--input", &wide, "--kernel", "gmd"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = ucusum(&[
        "test",
        "--input",
        &dir.path().join("missing.csv").to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_series_exits_with_code_three() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "flat.csv", &"2.5\n".repeat(40));
    let out = ucusum(&["test", "--input", &input]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("degenerate"));
}

#[test]
fn trajectory_of_constant_series_is_zero() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "flat.csv", &"1\n".repeat(20));
    let out_path = dir.path().join("traj.csv");
    let out = ucusum(&[
        "trajectory",
        "--input",
        &input,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,t,d_full,d_last"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cells[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cells.len(), 4);
    }
}

#[test]
fn trajectory_overlay_needs_a_triple() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.csv", &scale_change_csv(40));
    let out = ucusum(&["trajectory", "--input", &input, "--tau-star", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ucusum(&[
        "trajectory",
        "--input",
        &input,
        "--tau-star",
        "0.5",
        "--theta",
        "0.5642,1.1284,0.8920",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = String::from_utf8(out.stdout).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.ends_with(",0,0"), "{last}");
}

#[test]
fn theory_ranks_the_gmd_scale_change() {
    let dir = TempDir::new().unwrap();
    let grid = dir.path().join("grid.csv");
    let out = ucusum(&[
        "theory",
        "--kernel",
        "gmd",
        "--before",
        "normal:0,1",
        "--after",
        "normal:0,2",
        "--mc",
        "400000",
        "--seed",
        "5",
        "--tau-star",
        "0.3333333333333333",
        "--grid",
        "11",
        "--grid-csv",
        grid.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: TheoryReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(
        (report.triple.rho - 0.0916).abs() < 0.01,
        "{}",
        report.triple.rho
    );
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["ranking"], "first_vs_full");
    assert_eq!(report.psi_grid.as_ref().unwrap().len(), 11);
    let csv = std::fs::read_to_string(&grid).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.starts_with("t,psi1,psi2\n"));
}

#[test]
fn simulate_writes_a_power_table() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "study.json",
        r#"{"kernel": "gmd", "sizes": [40], "runs": 20, "seed": 3,
            "designs": [{"label": "NH", "pre": {"family": "normal"}}]}"#,
    );
    let table = dir.path().join("table.csv");
    let out = ucusum(&[
        "simulate",
        "--config",
        &config,
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("label,kernel,n,"));

    let text = ucusum(&["simulate", "--config", &config, "--text"]);
    assert!(String::from_utf8(text.stdout).unwrap().contains("NH"));
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "study.json",
        r#"{"kernel": "gmd", "sizes": [40], "runs": 20, "seed": 3, "bogus": 1,
            "designs": [{"label": "NH", "pre": {"family": "normal"}}]}"#,
    );
    let out = ucusum(&["simulate", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn shipped_configs_parse_and_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let study: Study = serde_json::from_str(&std::fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        study.validate().unwrap();
        assert_eq!(study.sizes, vec![63, 250, 1000, 4000]);
        seen += 1;
    }
    assert_eq!(seen, 3);
}
