//! End-to-end runs of the `mlit` binary: instance files in, reports and
//! exit codes out.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mlit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

const COMMUTATOR_Z6: &str = r#"{
    "ring": {"type":"Zn","n":6},
    "generators": [0, 1],
    "polynomial": {"m":2,"mode":"noncommuting","terms":[
        {"sign":1,"atoms":[{"var":1},{"var":2}]},
        {"sign":-1,"atoms":[{"var":2},{"var":1}]}]}
}"#;

const COMMUTATOR_M2: &str = r#"{
    "ring": {"type":"MatF2","t":2},
    "generators": ["0000", "1000", "0100", "0010", "0001"],
    "polynomial": {"m":2,"mode":"noncommuting","terms":[
        {"sign":1,"atoms":[{"var":1},{"var":2}]},
        {"sign":-1,"atoms":[{"var":2},{"var":1}]}]}
}"#;

#[test]
fn test_det_identity_instance_exits_zero() {
    let dir = tempdir();
    let inst = write_file(&dir, "z6.json", COMMUTATOR_Z6);
    let out = run(&["test-det", "--instance", inst.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["result"]["verdict"], "IdentityConsistent");
    assert_eq!(v["result"]["ledger_delta"]["f_eval_count"], 4);
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn test_det_matrix_commutator_exits_one_with_witness() {
    let dir = tempdir();
    let inst = write_file(&dir, "m2.json", COMMUTATOR_M2);
    let out = run(&["test-det", "--instance", inst.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["verdict"], "Violated");
    assert!(v["result"]["witness"].is_array());
    assert_eq!(v["result"]["ledger_delta"]["f_eval_count"], 25);
}

#[test]
fn reduce_then_test_det_pipeline() {
    let dir = tempdir();
    let split = write_file(&dir, "split.json", r#"{"k":4,"m":2,"f":[2,1,2,4]}"#);
    let reduced = dir.join("reduced.json");
    let out = run(&[
        "reduce",
        "--instance",
        split.to_str().unwrap(),
        "--output",
        reduced.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // the reduce report is itself an envelope; the instance is under "result"
    let report: Value = serde_json::from_str(&fs::read_to_string(&reduced).unwrap()).unwrap();
    let mit_path = write_file(&dir, "mit.json", &report["result"].to_string());
    let out = run(&["test-det", "--instance", mit_path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "the compiled instance must violate"
    );
    let v = stdout_json(&out);
    assert_eq!(v["result"]["verdict"], "Violated");

    // and the dedicated verifier agrees, with ground truth attached
    let out = run(&[
        "verify-reduction",
        "--instance",
        split.to_str().unwrap(),
        "--span-check",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["exact_split"], true);
    assert_eq!(v["result"]["matches_covering"], true);
    assert_eq!(v["result"]["generator_equals_span"], true);
}

#[test]
fn test_rand_is_reproducible_given_seed() {
    let dir = tempdir();
    let inst = write_file(&dir, "m2.json", COMMUTATOR_M2);
    let run_once = || {
        let out = run(&[
            "test-rand",
            "--instance",
            inst.to_str().unwrap(),
            "--seed",
            "42",
        ]);
        assert_eq!(out.status.code(), Some(1));
        let mut v = stdout_json(&out);
        v.as_object_mut().unwrap().remove("timing_ms");
        v
    };
    assert_eq!(run_once(), run_once());
}

#[test]
fn spectral_csv_table() {
    let out = run(&["spectral", "--k", "6", "--ell", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("k,ell,delta_exact,delta_numeric,delta_hat,bound_1_over_2ell")
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("6,2,0.75,"), "row: {row}");
}

#[test]
fn cost_curve_argmin_near_optimum() {
    let out = run(&["cost", "--k", "1000", "--m", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut best = (0usize, f64::INFINITY);
    for line in text.lines().skip(1) {
        let mut cols = line.split(',');
        let ell: usize = cols.next().unwrap().parse().unwrap();
        let _rel: f64 = cols.next().unwrap().parse().unwrap();
        let unrel: f64 = cols.next().unwrap().parse().unwrap();
        if unrel < best.1 {
            best = (ell, unrel);
        }
    }
    assert!(
        best.0 >= 50 && best.0 <= 200,
        "argmin {} outside [l*/2, 2l*]",
        best.0
    );

    let out = run(&["cost", "--k", "1000", "--m", "2"]);
    let v = stdout_json(&out);
    assert_eq!(v["result"]["optimized"]["ell_star"], 100);
    assert_eq!(v["result"]["optimized"]["feasible"], true);
}

#[test]
fn szegedy_detection_and_exit_codes() {
    let out = run(&["szegedy", "--k", "6", "--ell", "2", "--marked", "0"]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "marked instance crosses the threshold"
    );
    let v = stdout_json(&out);
    assert!(v["result"]["min_fidelity"].as_f64().unwrap() <= 0.9);

    let out = run(&["szegedy", "--k", "6", "--ell", "2", "--epsilon", "0.0667"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "empty marked set stays at fidelity 1"
    );
}

#[test]
fn lift_deterministic_and_verdict_coded() {
    let args = [
        "lift",
        "--table",
        "1,1,3,4,5,6,7,8,9,10,11,12",
        "--m",
        "2",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["result"]["instance"]["k"], 12);
    let split = v["result"]["has_split_collision"].as_bool().unwrap();
    assert_eq!(a.status.code(), Some(if split { 1 } else { 0 }));
}

#[test]
fn walk_search_reports_witness_and_seed() {
    let dir = tempdir();
    let inst = write_file(&dir, "m2.json", COMMUTATOR_M2);
    let out = run(&[
        "walk-search",
        "--instance",
        inst.to_str().unwrap(),
        "--ell",
        "2",
        "--seed",
        "11",
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "the matrix commutator must be found"
    );
    let v = stdout_json(&out);
    assert!(v["result"]["hit_step"].is_u64());
    assert!(v["result"]["witness"].is_array());
    // every report records its seed
    assert_eq!(v["config"]["seed"], 11);
}

#[test]
fn every_json_report_carries_a_seed() {
    for args in [
        vec!["cost", "--k", "100", "--m", "2"],
        vec!["spectral", "--k", "5", "--ell", "2"],
        vec!["szegedy", "--k", "4", "--ell", "2", "--marked", "0"],
    ] {
        let out = run(&args);
        let v = stdout_json(&out);
        assert!(
            v["config"]["seed"].is_u64(),
            "no seed in report for {args:?}"
        );
    }
}

#[test]
fn lemmas_report_exact_rationals() {
    let dir = tempdir();
    let inst = write_file(
        &dir,
        "threex.json",
        r#"{
            "ring": {"type":"Zn","n":6},
            "generators": [0, 1],
            "polynomial": {"m":1,"mode":"commuting","terms":[
                {"sign":1,"atoms":[{"const":3},{"var":1}]}]}
        }"#,
    );
    let out = run(&["lemmas", "--instance", inst.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    let coset = &v["result"]["coset_structure"][0];
    assert_eq!(coset["is_coset"], true);
    assert_eq!(coset["vanishing_set"], serde_json::json!([0, 2, 4]));
    let sub = &coset["subsum_bounds"][0];
    assert!(sub["exact_prob"]["num"].is_u64() && sub["exact_prob"]["den"].is_u64());

    // CSV renders the same rationals as num/den strings
    let out = run(&[
        "lemmas",
        "--instance",
        inst.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("ell,nonzero,tuples_total,fraction,bound,holds")
    );
    assert!(text.lines().nth(1).unwrap().contains("1/2"), "{text}");
}

#[test]
fn env_var_cap_overrides_apply() {
    // C(6, 2) = 15 vertices exceeds a matrix cap of 10
    let out = bin()
        .args(["spectral", "--k", "6", "--ell", "2"])
        .env("MLIT_MATRIX_CAP", "10")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds cap 10"));
}

#[test]
fn bundled_sample_instances_stay_valid() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances");
    let cases = [
        ("commutator_z6.json", "test-det", 0),
        ("commutator_m2f2.json", "test-det", 1),
        ("scaled_var_z6.json", "lemmas", 0),
    ];
    for (file, cmd, code) in cases {
        let path = root.join(file);
        let out = run(&[cmd, "--instance", path.to_str().unwrap()]);
        assert_eq!(
            out.status.code(),
            Some(code),
            "{file}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let split = root.join("split_4_2.json");
    let out = run(&["verify-reduction", "--instance", split.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempdir();
    let bad = write_file(&dir, "bad.json", r#"{"k":4,"m":2,"f":[0,1,2,4]}"#);
    let out = run(&["reduce", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = run(&["test-det", "--instance", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(2));
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mlit-cli-test-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}
