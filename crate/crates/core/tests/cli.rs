use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use centralab::certify::{batch_run, BatchConfig, Family};
use centralab::cli::emit_report;
use centralab::ToleranceConfig;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_centralab"));
    c.env_remove("CENTRALAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn centralab")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn diag12(dir: &Path) -> PathBuf {
    write(dir, "diag12.json", r#"{"n": 2, "re": [[1, 0], [0, 2]], "im": [[0, 0], [0, 0]]}"#)
}

fn jordan3(dir: &Path) -> PathBuf {
    write(
        dir,
        "j3.json",
        r#"{"n": 3, "re": [[2, 1, 0], [0, 2, 1], [0, 0, 2]], "im": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]}"#,
    )
}

fn generic3(dir: &Path) -> PathBuf {
    write(
        dir,
        "g3.json",
        r#"{"n": 3, "re": [[0.3, -1.2, 0.5], [0.7, 0.1, -0.4], [1.1, 0.9, -0.6]], "im": [[0.2, 0.0, -0.3], [0.5, -0.8, 0.1], [0.0, 0.4, 0.6]]}"#,
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn certify_diagonal_is_smiley() {
    let dir = TempDir::new().unwrap();
    let a = diag12(dir.path());
    let out = run(&["certify", "--input", p(&a), "--k", "1", "--l", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    let cert = &doc["certificate"];
    assert_eq!(cert["is_smiley"], Value::Bool(true));
    assert_eq!(cert["is_proper"], Value::Bool(true));
    assert_eq!(cert["dim_Cl"], 2);
    assert_eq!(cert["dim_CkCl"], 2);
    assert_eq!(doc["claim"], "proper");
    assert_eq!(doc["claim_holds"], Value::Bool(true));
    assert_eq!(cert["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn certify_records_seed() {
    let dir = TempDir::new().unwrap();
    let a = diag12(dir.path());
    let out = run(&["--seed", "9", "certify", "--input", p(&a), "--k", "1", "--l", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["certificate"]["seed"], 9);
}

#[test]
fn impossible_containment_tolerance_fails_the_claim() {
    let dir = TempDir::new().unwrap();
    let a = diag12(dir.path());
    let out = run(&["--tol-contain", "1e-300", "certify", "--input", p(&a), "--k", "2", "--l", "2"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["claim_holds"], Value::Bool(false));
}

#[test]
fn impossible_tolerance_can_trip_the_route_check() {
    let dir = TempDir::new().unwrap();
    let a = generic3(dir.path());
    let out = run(&["--tol-contain", "1e-300", "certify", "--input", p(&a), "--k", "2", "--l", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("integrity"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn certify_k_above_l_is_exploratory() {
    let dir = TempDir::new().unwrap();
    let a = jordan3(dir.path());
    let out = run(&["certify", "--input", p(&a), "--k", "3", "--l", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["claim"], "exploratory");
    assert_eq!(doc["claim_holds"], Value::Null);
}

#[test]
fn shift_n3_succeeds() {
    let out = run(&["shift", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["kind"], "shift");
    assert_eq!(doc["nilpotency_order"], 3);
    assert_eq!(doc["holds"], Value::Bool(true));
    assert_eq!(doc["progression"], Value::Null);
}

#[test]
fn shift_with_certificate() {
    let out = run(&["shift", "--n", "6", "--k", "2", "--l", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["certificate"]["is_proper"], Value::Bool(true));
    assert_eq!(doc["structure"]["holds"], Value::Bool(true));
    assert_eq!(doc["progression"]["holds"], Value::Bool(true));
}

#[test]
fn shift_k_without_l_is_usage_error() {
    let out = run(&["shift", "--n", "4", "--k", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn double_k0_is_rejected() {
    let dir = TempDir::new().unwrap();
    let a = diag12(dir.path());
    let out = run(&["double", "--input", p(&a), "--k", "0", "--l", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("k must be ≥ 1"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn double_reports_dimensions() {
    let dir = TempDir::new().unwrap();
    let a = jordan3(dir.path());
    let out = run(&["double", "--input", p(&a), "--k", "1", "--l", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["dim_Cl"], 3);
    assert_eq!(doc["dim_CkCl"], 3);
    assert_eq!(doc["basis"].as_array().unwrap().len(), 3);
}

#[test]
fn unknown_subcommand_prints_usage() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let v = run(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).contains(centralab::VERSION));
}

#[test]
fn bad_tolerance_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let a = diag12(dir.path());
    let out = run(&["--tol-rank=-1", "centralizer", "--input", p(&a), "--s", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("rank_rel_tol"), "{}", stderr(&out));
}

#[test]
fn matrix_file_errors_are_distinct() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    let ragged = write(dir.path(), "ragged.json", r#"{"n": 2, "re": [[1, 0], [0]], "im": [[0, 0], [0, 0]]}"#);
    let nonfinite = write(dir.path(), "nan.json", r#"{"n": 1, "re": [[1e999]], "im": [[0]]}"#);
    let malformed = write(dir.path(), "bad.json", "not json");
    let mut messages = Vec::new();
    for f in [&missing, &ragged, &nonfinite, &malformed] {
        let out = run(&["centralizer", "--input", p(f), "--s", "1"]);
        assert_eq!(out.status.code(), Some(1), "{}", p(f));
        assert!(out.stdout.is_empty());
        messages.push(stderr(&out));
    }
    assert!(messages[0].contains("cannot read matrix file"), "{}", messages[0]);
    assert!(messages[1].contains("ragged"), "{}", messages[1]);
    assert!(messages[2].contains("non-finite"), "{}", messages[2]);
    assert!(messages[3].contains("malformed"), "{}", messages[3]);
}

#[test]
fn centralizer_of_diagonal() {
    let dir = TempDir::new().unwrap();
    let a = diag12(dir.path());
    let out = run(&["centralizer", "--input", p(&a), "--s", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["kind"], "centralizer");
    assert_eq!(doc["dim"], 2);
    assert_eq!(doc["n"], 2);
    let basis = doc["basis"].as_array().unwrap();
    assert_eq!(basis.len(), 2);
    for b in basis {
        let re = &b["re"];
        let im = &b["im"];
        for (i, j) in [(0, 1), (1, 0)] {
            assert!(re[i][j].as_f64().unwrap().abs() < 1e-12);
            assert!(im[i][j].as_f64().unwrap().abs() < 1e-12);
        }
    }
}

#[test]
fn centralizer_to_output_file() {
    let dir = TempDir::new().unwrap();
    let a = jordan3(dir.path());
    let target = dir.path().join("c.json");
    let out = run(&["--output", p(&target), "centralizer", "--input", p(&a), "--s", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(doc["s"], 2);
    assert_eq!(doc["dim"], 5);
}

#[test]
fn decompose_jordan_block() {
    let dir = TempDir::new().unwrap();
    let a = jordan3(dir.path());
    let out = run(&["decompose", "--input", p(&a)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["m"], 2);
    let eig = doc["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 1);
    assert!((eig[0]["re"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(eig[0]["rank"], 3);
    let s = &doc["semisimple"]["re"];
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 2.0 } else { 0.0 };
            assert!((s[i][j].as_f64().unwrap() - want).abs() < 1e-9);
        }
    }
}

#[test]
fn hulls_routes_agree() {
    let dir = TempDir::new().unwrap();
    let a = jordan3(dir.path());
    let out = run(&["hulls", "--input", p(&a)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["dim_pol"], 3);
    assert_eq!(doc["dim_vn"], 9);
    assert_eq!(doc["vn_routes"]["agree"], Value::Bool(true));
    assert_eq!(doc["vn_routes"]["double_commutant_dim"], 9);
}

fn batch_config(dir: &Path, body: &str) -> PathBuf {
    write(dir, "batch.json", body)
}

const SMALL_BATCH: &str = r#"{
  "family": "random-generic",
  "sizes": [2, 3],
  "kl_grid": [[1, 1], [1, 2], [2, 1]],
  "seeds": [1, 2, 3]
}"#;

#[test]
fn batch_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = batch_config(dir.path(), SMALL_BATCH);
    let first = run(&["--threads", "1", "batch", "--config", p(&cfg)]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let again = run(&["--threads", "1", "batch", "--config", p(&cfg)]);
    let wide = run(&["--threads", "6", "batch", "--config", p(&cfg)]);
    let env = bin()
        .env("CENTRALAB_THREADS", "3")
        .args(["batch", "--config", p(&cfg)])
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0), "{}", stderr(&env));
    assert_eq!(first.stdout, again.stdout);
    assert_eq!(first.stdout, wide.stdout);
    assert_eq!(first.stdout, env.stdout);
    let doc = stdout_json(&first);
    assert_eq!(doc["aggregate"]["instances"], 18);
    assert_eq!(doc["runtime_ms"], 0);
}

#[test]
fn batch_seed_flag_replaces_seed_list() {
    let dir = TempDir::new().unwrap();
    let cfg = batch_config(dir.path(), SMALL_BATCH);
    let out = run(&["--seed", "5", "batch", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["aggregate"]["instances"], 6);
    for inst in doc["instances"].as_array().unwrap() {
        assert_eq!(inst["seed"], 5);
    }
}

#[test]
fn batch_bad_thread_env_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = batch_config(dir.path(), SMALL_BATCH);
    let out = bin()
        .env("CENTRALAB_THREADS", "zero")
        .args(["batch", "--config", p(&cfg)])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("CENTRALAB_THREADS"));
}

#[test]
fn batch_unknown_field_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = batch_config(
        dir.path(),
        r#"{"family": "random-generic", "sizes": [2], "kl_grid": [[1, 1]], "seeds": [1], "colour": 3}"#,
    );
    let out = run(&["batch", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("invalid batch config"));
}

#[test]
fn batch_with_no_seeds_is_an_empty_report() {
    let dir = TempDir::new().unwrap();
    let cfg = batch_config(dir.path(), r#"{"family": "random-normal", "sizes": [3], "kl_grid": [[1, 1]]}"#);
    let out = run(&["batch", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["instances"], Value::Array(vec![]));
    assert_eq!(doc["aggregate"]["instances"], 0);
    assert_eq!(doc["aggregate"]["asserted_failed"], 0);
}

#[test]
fn batch_explicit_files_and_output_path() {
    let dir = TempDir::new().unwrap();
    let a = diag12(dir.path());
    let b = jordan3(dir.path());
    let target = dir.path().join("report.json");
    let body = serde_json::json!({
        "family": "explicit-files",
        "files": [p(&a), p(&b)],
        "kl_grid": [[1, 1], [2, 2]],
        "output_path": p(&target),
    });
    let cfg = batch_config(dir.path(), &body.to_string());
    let out = run(&["batch", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(doc["aggregate"]["instances"], 4);
    assert_eq!(doc["aggregate"]["asserted_passed"], 4);
}

#[test]
fn batch_missing_explicit_file_exits_one() {
    let dir = TempDir::new().unwrap();
    let body = serde_json::json!({
        "family": "explicit-files",
        "files": [p(&dir.path().join("absent.json"))],
        "kl_grid": [[1, 1]],
    });
    let cfg = batch_config(dir.path(), &body.to_string());
    let out = run(&["batch", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
}

fn schema() -> jsonschema::JSONSchema {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schemas/report.schema.json")).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&value).expect("schema compiles")
}

fn assert_valid(doc: &Value) {
    let compiled = schema();
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("report violates schema: {msgs:#?}");
}

#[test]
fn batch_reports_match_schema() {
    let dir = TempDir::new().unwrap();
    let typed = r#"{"family": "random-type-m", "sizes": [4], "m": 1, "kl_grid": [[1, 3], [4, 3]], "seeds": [1, 2]}"#;
    let shift = r#"{"family": "shift-truncation", "sizes": [3, 4], "kl_grid": [[1, 1], [2, 2]], "seeds": [0], "record_runtime": true}"#;
    for body in [SMALL_BATCH, typed, shift] {
        let cfg = batch_config(dir.path(), body);
        let out = run(&["batch", "--config", p(&cfg)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_valid(&stdout_json(&out));
    }
}

#[test]
fn emit_report_writes_canonical_json() {
    let dir = TempDir::new().unwrap();
    let cfg = BatchConfig {
        family: Family::RandomNormal,
        sizes: vec![2],
        m: None,
        kl_grid: vec![(1, 1)],
        seeds: vec![4, 5],
        tolerances: ToleranceConfig::default(),
        output_path: None,
        files: vec![],
        cond_bound: 20.0,
        record_runtime: false,
    };
    let report = batch_run(&cfg).unwrap();
    let target = dir.path().join("r.json");
    emit_report(&report, &target).unwrap();
    let text = std::fs::read_to_string(&target).unwrap();
    assert!(text.ends_with("}\n"));
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_valid(&doc);
    assert_eq!(text, centralab::cli::json::to_canonical_string(&doc).unwrap());

    let via_cli = run(&["--seed", "4", "batch", "--config", p(&batch_config(dir.path(), &serde_json::to_string(&cfg).unwrap()))]);
    assert_eq!(via_cli.status.code(), Some(0), "{}", stderr(&via_cli));
    let doc_cli = stdout_json(&via_cli);
    assert_eq!(doc_cli["instances"][0], doc["instances"][0]);
}
