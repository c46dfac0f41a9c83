use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_consensus-lab"))
        .args(args)
        .env_remove("CONSENSUS_LAB_THREADS")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn dgr_table_has_one_row_per_state() {
    let out = bin(&["dgr", "--n", "10", "--p", "0.3", "--gamma", "complete"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["k", "lambda", "E_k", "E_sym"]);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][2], "0.0");
    assert_eq!(rows[10][2], "0.0");
}

#[test]
fn survivor_probabilities_sum_to_one() {
    let out = bin(&["survivor", "--n", "5", "--m", "3", "--p", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 3);
    let total: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn exact_matches_golden_value() {
    let graph = data("k4.edges");
    let out = bin(&["exact", "--graph", graph.to_str().unwrap(), "--m", "2", "--p", "0.5", "--init", "uniform"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&stdout(&out));
    let col = header.iter().position(|h| h == "expected_time").unwrap();
    let t: f64 = rows[0][col].parse().unwrap();
    assert!((t - 5.375).abs() < 1e-12);
}

#[test]
fn simulate_header_uses_bench_fields() {
    let out = bin(&["simulate", "--family", "cycle", "--n", "6", "--reps", "200", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["graph", "n", "edges", "p", "estimate", "stderr", "theory", "ratio", "init"]);
    assert_eq!(rows[0][0], "C_6");
    assert_eq!(rows[0][6], "");
}

#[test]
fn per_run_and_json_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.csv");
    let out = bin(&[
        "simulate", "--family", "star", "--n", "5", "--reps", "50", "--per-run", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let (header, rows) = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(header, ["replication", "winner", "steps"]);
    assert_eq!(rows.len(), 50);

    let out = bin(&["survivor", "--n", "4", "--m", "2", "--p", "0.5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn thread_variable_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_consensus-lab"))
            .args(["simulate", "--family", "path", "--n", "7", "--m", "3", "--p", "0.4", "--reps", "500", "--seed", "9"])
            .env("CONSENSUS_LAB_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn usage_and_input_errors_exit_2() {
    assert_eq!(bin(&["simulate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(bin(&["teleport"]).status.code(), Some(2));
    assert_eq!(bin(&["exact", "--graph", "/does/not/exist"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.edges");
    std::fs::write(&bad, "3\n0 1\n").unwrap();
    let out = bin(&["exact", "--graph", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    assert_eq!(bin(&["simulate", "--family", "sundew", "--n", "8"]).status.code(), Some(2));
    assert_eq!(bin(&["exact", "--family", "path", "--n", "30"]).status.code(), Some(2));
}

#[test]
fn checks_report_through_exit_status() {
    assert_eq!(bin(&["compare-regular", "--n", "6"]).status.code(), Some(0));
    assert_eq!(bin(&["scan-monotonicity", "--n", "12", "--gamma", "complete"]).status.code(), Some(0));
    let single = bin(&["scan-monotonicity", "--n", "3", "--k", "1"]);
    assert_eq!(single.status.code(), Some(0));
    assert!(!single.stderr.is_empty());
    assert_eq!(bin(&["scan-monotonicity", "--n", "4", "--gamma", "0.2,0.5,0.9"]).status.code(), Some(2));
    assert_eq!(bin(&["verify-bound", "--family", "lollipop", "--n", "12", "--r", "4", "--reps", "500"]).status.code(), Some(0));
    assert_eq!(bin(&["sundew-lollipop", "--n", "30", "--r", "1", "--reps", "200"]).status.code(), Some(1));
    assert_eq!(bin(&["sundew-lollipop", "--n", "40", "--r", "12", "--reps", "3000"]).status.code(), Some(0));
}

#[test]
fn coupon_modes() {
    for mode in ["multipass", "geometric", "slow"] {
        let out = bin(&["coupon", "--mode", mode, "--n", "8", "--q", "0.5", "--reps", "500"]);
        assert_eq!(out.status.code(), Some(0), "{mode}");
        let (_, rows) = csv_rows(&stdout(&out));
        assert_eq!(rows.len(), 1);
    }
    let out = bin(&["coupon", "--n", "8", "--big-n", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_single_graph_carries_exact_theory() {
    let out = bin(&["bench", "--family", "complete", "--n", "5", "--p", "0.2", "--reps", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = csv_rows(&stdout(&out));
    let est: f64 = rows[0][4].parse().unwrap();
    let se: f64 = rows[0][5].parse().unwrap();
    let theory: f64 = rows[0][6].parse().unwrap();
    assert!((est - theory).abs() <= 4.0 * se);
}
