use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn nfold_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_nfold"))
        .args(args)
        .env_remove("HUGE_NFOLD_BUDGET")
        .envs(env.iter().copied())
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn nfold(args: &[&str]) -> Run {
    nfold_env(args, &[])
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn supports(v: &Value) -> Vec<usize> {
    v["presentation"]["types"].as_array().unwrap().iter().map(|t| t["support"].as_array().unwrap().len()).collect()
}

#[test]
fn symmetric_table_is_feasible_with_small_support() {
    for strategy in ["augment", "cone"] {
        let r = nfold(&["feasible", p(&data("symmetric_2x2x4.json")), "--strategy", strategy]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let v = r.json();
        assert_eq!(v["verdict"], "feasible");
        assert!(supports(&v).iter().all(|&s| s <= 2));
        assert_eq!(v["metadata"]["strategy"], strategy);
    }
}

#[test]
fn tampered_count_fails_check() {
    let dir = tempfile::tempdir().unwrap();
    let sol = write(
        &dir,
        "sol.json",
        r#"{"types": [{"support": [{"brick": ["0", "1", "1", "0"], "mult": "2"}, {"brick": ["1", "0", "0", "1"], "mult": "3"}]}]}"#,
    );
    let r = nfold(&["check", p(&data("symmetric_2x2x4.json")), p(&sol)]);
    assert_eq!(r.code, 1);
    let v = r.json();
    assert_eq!(v["valid"], false);
    assert!(v["failures"].as_array().unwrap().iter().any(|f| f == "counts_ok"), "{v}");
}

#[test]
fn contradiction_gets_a_checkable_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verdict.json");
    let r = nfold(&["solve", p(&data("contradiction_2x2x1.json")), "--out", p(&out)]);
    assert_eq!(r.code, 1, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["verdict"], "infeasible");
    assert_eq!(v["certificate"]["kind"], "slack");
    assert_eq!(std::fs::read_to_string(&out).unwrap(), r.stdout);

    let ok = nfold(&["certify", p(&out), "--instance", p(&data("contradiction_2x2x1.json"))]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    assert_eq!(ok.json()["valid"], true);
    assert_eq!(ok.json()["matches_instance"], true);

    let other = nfold(&["certify", p(&out), "--instance", p(&data("symmetric_2x2x4.json"))]);
    assert_eq!(other.code, 1);
    assert_eq!(other.json()["matches_instance"], false);

    // a certificate with its slack bumped no longer verifies
    let text = std::fs::read_to_string(&out).unwrap();
    let mut cert: Value = serde_json::from_str(&text).unwrap();
    let slack: i64 = cert["certificate"]["slack"].as_str().unwrap().parse().unwrap();
    cert["certificate"]["slack"] = Value::String((slack + 1).to_string());
    let bad = write(&dir, "bad.json", &cert.to_string());
    let r = nfold(&["certify", p(&bad)]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["valid"], false);
}

#[test]
fn unbalanced_margins_are_rejected_with_margin_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        &dir,
        "unbalanced.json",
        r#"{"kind": "table", "l": 2, "m": 2, "line_sums": [["1", "0"], ["0", "0"]],
            "types": [{"rows": ["1", "0"], "cols": ["0", "0"], "count": "1"}]}"#,
    );
    let out = dir.path().join("v.json");
    let r = nfold(&["feasible", p(&inst), "--out", p(&out)]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["certificate"]["kind"], "margins");
    assert_eq!(r.json()["metadata"]["route"], "fast_reject");
    assert_eq!(nfold(&["certify", p(&out), "--instance", p(&inst)]).code, 0);
}

#[test]
fn solve_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, verdict) in [("huge_3x3.json", "feasible"), ("knapsack.json", "optimal")] {
        let out = dir.path().join(format!("{name}.out"));
        let r = nfold(&["solve", p(&data(name)), "--out", p(&out)]);
        assert_eq!(r.code, 0, "{name}: {}", r.stderr);
        assert_eq!(r.json()["verdict"], verdict);
        let c = nfold(&["check", p(&data(name)), p(&out)]);
        assert_eq!(c.code, 0, "{name}: {}", c.stdout);
        assert_eq!(c.json()["valid"], true);
    }
}

#[test]
fn knapsack_optimum() {
    let r = nfold(&["solve", p(&data("knapsack.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json()["cost"], "9");
    // the cone strategy enumerates bricks, so it needs a finite brick set
    let cone = nfold(&["solve", p(&data("knapsack.json")), "--strategy", "cone"]);
    assert_eq!(cone.code, 2);
    assert!(cone.stderr.contains("not finite"), "{}", cone.stderr);
    // the oracle enumerates boxes, so it needs finite bounds
    let r = nfold(&["--oracle", "solve", p(&data("knapsack.json"))]);
    assert_eq!(r.code, 2);
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("knapsack.json")).unwrap().replace(r#"["inf", "inf"]"#, r#"["6", "6"]"#);
    let boxed = write(&dir, "boxed.json", &text);
    for args in [vec!["solve", p(&boxed), "--strategy", "cone"], vec!["--oracle", "solve", p(&boxed)]] {
        let r = nfold(&args);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(r.json()["cost"], "9");
    }
    // the augment phase one only builds slack programs for 0 <= x < inf
    let r = nfold(&["solve", p(&boxed)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("slack program"), "{}", r.stderr);
}

#[test]
fn output_is_byte_stable() {
    for args in [
        vec!["solve", "huge_3x3.json"],
        vec!["solve", "contradiction_2x2x1.json"],
        vec!["solve", "symmetric_2x2x4.json", "--strategy", "cone"],
    ] {
        let path = data(args[1]);
        let mut full: Vec<&str> = args.clone();
        full[1] = p(&path);
        let a = nfold(&full);
        let b = nfold(&full);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert!(!a.stdout.contains("wall_time"));
    }
}

#[test]
fn threads_do_not_change_the_answer() {
    let path = data("huge_3x3.json");
    let serial = nfold(&["solve", p(&path)]);
    let threaded = nfold(&["--threads", "4", "solve", p(&path)]);
    assert_eq!(serial.code, 0);
    assert_eq!(serial.stdout, threaded.stdout);
}

#[test]
fn record_time_adds_wall_time() {
    let r = nfold(&["--record-time", "solve", p(&data("symmetric_2x2x4.json"))]);
    assert_eq!(r.code, 0);
    assert!(r.json()["metadata"]["wall_time_ms"].is_u64(), "{}", r.stdout);
}

#[test]
fn tiny_budget_exits_2() {
    let r = nfold_env(&["solve", p(&data("huge_3x3.json"))], &[("HUGE_NFOLD_BUDGET", "3")]);
    assert_eq!(r.code, 2, "{}", r.stdout);
    assert!(r.stderr.contains("budget"), "{}", r.stderr);
    let r = nfold_env(&["solve", p(&data("huge_3x3.json"))], &[("HUGE_NFOLD_BUDGET", "lots")]);
    assert_eq!(r.code, 2);
}

#[test]
fn bad_input_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"kind": "table", "l": 2, "m": 2, "line_sums": [["1", "0"], ["0", "x"]],
            "types": [{"rows": ["1", "0"], "cols": ["1", "0"], "count": "1"}]}"#,
    );
    let r = nfold(&["solve", p(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line_sums[1][1]"), "{}", r.stderr);
    assert!(r.stdout.is_empty());

    let unknown = write(&dir, "unknown.json", r#"{"kind": "table", "l": 1, "m": 1, "sums": []}"#);
    let r = nfold(&["solve", p(&unknown)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("sums"), "{}", r.stderr);

    let r = nfold(&["solve", p(&dir.path().join("missing.json"))]);
    assert_eq!(r.code, 2);
    assert_eq!(nfold(&["frobnicate"]).code, 2);
    assert_eq!(nfold(&[]).code, 2);
}

#[test]
fn graver_solver_and_oracle_agree() {
    let path = data("incidence_k22.json");
    let fast = nfold(&["graver", "--matrix", p(&path)]);
    let slow = nfold(&["--oracle", "graver", "--matrix", p(&path)]);
    assert_eq!(fast.code, 0);
    assert_eq!(fast.stdout, slow.stdout);
    assert_eq!(fast.json()["count"], 2);
}

#[test]
fn complexity_of_pair_bimatrix() {
    let r = nfold(&["complexity", "--bimatrix", p(&data("pair_bimatrix.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json()["g"], 2);
    assert_eq!(r.json()["template_count"], r.json()["templates"].as_array().unwrap().len());
}

#[test]
fn reduce_and_expand() {
    let dir = tempfile::tempdir().unwrap();
    let sol = write(
        &dir,
        "sol.json",
        r#"{"types": [{"support": [{"brick": ["0", "0"], "mult": "1"}, {"brick": ["1", "1"], "mult": "1"}, {"brick": ["2", "2"], "mult": "1"}]}]}"#,
    );
    let inst = data("knapsack.json");
    let out = dir.path().join("reduced.json");
    let r = nfold(&["reduce", p(&inst), p(&sol), "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!((v["support_before"].as_u64(), v["support_after"].as_u64()), (Some(3), Some(1)));
    assert_eq!(nfold(&["check", p(&inst), p(&out)]).code, 0);

    let e = nfold(&["expand", p(&inst), p(&out)]);
    assert_eq!(e.code, 0);
    assert_eq!(e.json()["n"], 3);
    assert_eq!(e.json()["bricks"], serde_json::json!([["1", "1"], ["1", "1"], ["1", "1"]]));

    let r = nfold(&["expand", p(&data("huge_3x3.json")), p(&out)]);
    assert_eq!(r.code, 2);
}

#[test]
fn oracle_mode_decides_small_tables() {
    let r = nfold(&["--oracle", "feasible", p(&data("symmetric_2x2x4.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = nfold(&["--oracle", "feasible", p(&data("contradiction_2x2x1.json"))]);
    assert_eq!(r.code, 1, "{}", r.stderr);
}
