use std::process::{Command, Output};

fn gapforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapforge"))
        .args(args)
        .env("GAPFORGE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn header_is_fixed() {
    let o = gapforge(&["gap", "--n", "4", "--method", "formula"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o).lines().next().unwrap(),
        "group,boundary,d,m,n,lambda,method,residual,iterations,seconds,status"
    );
}

#[test]
fn dense_rows_obey_square_law() {
    let o = gapforge(&["gap", "--group", "unitary", "--boundary", "open,closed", "--n", "8", "--method", "dense"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 2);
    let open: f64 = r[0][5].parse().unwrap();
    let closed: f64 = r[1][5].parse().unwrap();
    assert_eq!(r[0][1], "open");
    assert!((closed - open * open).abs() < 1e-10);
    assert!(r.iter().all(|row| row[10] == "ok"));
}

#[test]
fn grouping_must_divide_n() {
    assert_eq!(gapforge(&["gap", "--n", "7", "--m", "2"]).status.code(), Some(2));
}

#[test]
fn bad_group_or_boundary_is_usage_error() {
    assert_eq!(gapforge(&["gap", "--n", "4", "--group", "spin"]).status.code(), Some(2));
    assert_eq!(gapforge(&["gap", "--n", "4", "--boundary", "twisted"]).status.code(), Some(2));
}

#[test]
fn formula_needs_unitary() {
    let o = gapforge(&["gap", "--n", "4", "--group", "orthogonal", "--method", "formula"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn deterministic_output_is_byte_stable() {
    let args = [
        "gap",
        "--group",
        "unitary,orthogonal",
        "--boundary",
        "open,closed",
        "--n",
        "4:10:2",
        "--deterministic",
    ];
    let a = gapforge(&args);
    let b = gapforge(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = rows(&stdout(&a));
    assert_eq!(r.len(), 16);
    assert!(r.iter().all(|row| row[9].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn json_output_has_one_object_per_row() {
    let o = gapforge(&["gap", "--n", "4,6", "--format", "json", "--method", "formula"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let items = v.as_array().unwrap();
    assert_eq!(items.len(), 2);
    assert_eq!(items[1]["n"], 6);
}

#[test]
fn dmrg_writes_history() {
    let dir = std::env::temp_dir().join(format!("gapforge-hist-{}", std::process::id()));
    let o = gapforge(&[
        "gap",
        "--n",
        "8",
        "--method",
        "dmrg",
        "--chi",
        "16",
        "--history-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let hist = std::fs::read_to_string(dir.join("unitary_open_d2_m1_n8.csv")).unwrap();
    assert!(hist.starts_with("sweep,energy,delta,max_entropy"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn depth_reports_both_bounds() {
    let o = gapforge(&["depth", "--d", "2", "--m", "1", "--eps", "1e-3", "--n", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let r = rows(&out);
    let open = r.iter().find(|row| row[3] == "open").unwrap();
    let coefficient: f64 = open[7].parse().unwrap();
    let prior: f64 = open[9].parse().unwrap();
    assert!((coefficient - 1.55).abs() < 0.01, "{out}");
    assert!((prior - 6.21).abs() < 0.01, "{out}");
}

#[test]
fn depth_rejects_bad_epsilon() {
    assert_eq!(gapforge(&["depth", "--eps", "2"]).status.code(), Some(2));
    assert_eq!(gapforge(&["depth", "--eps", "0"]).status.code(), Some(2));
}

#[test]
fn depth_compare_ratio_grows_toward_limit() {
    let o = gapforge(&["depth", "--compare-m", "1,log", "--n", "1048576"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let ratio: f64 = rows(&out)[0].last().unwrap().parse().unwrap();
    assert!((ratio - 3.1).abs() < 0.31, "{out}");
}

#[test]
fn verify_lemmas_pass() {
    let o = gapforge(&["verify", "--suite", "lemmas", "--eta", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn verify_rejects_odd_eta() {
    assert_eq!(gapforge(&["verify", "--suite", "lemmas", "--eta", "7"]).status.code(), Some(2));
}
