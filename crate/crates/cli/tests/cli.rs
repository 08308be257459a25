use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> String {
    root()
        .join("corpus")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scoreforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scoreforge"))
        .args(args)
        .env_remove("SCOREFORGE_JOBS")
        .output()
        .expect("binary runs")
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_scoreforge"))
        .args(args)
        .env_remove("SCOREFORGE_JOBS")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn single_matrix_witnesses() {
    let out = scoreforge(&["run", "--witnesses", "all", &corpus("single_matrix.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "consistent");
    let entry = &v["results"][0]["verdicts"][0];
    assert_eq!(entry["assumption"], "single");
    let witnesses: Vec<(u64, u64)> = entry["witnesses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| (w["tp"].as_u64().unwrap(), w["tn"].as_u64().unwrap()))
        .collect();
    assert_eq!(witnesses, [(743, 4031), (743, 4032)]);

    let first = json(&scoreforge(&["run", &corpus("single_matrix.json")]));
    assert_eq!(
        first["results"][0]["verdicts"][0]["witnesses"]
            .as_array()
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn corpus_exit_codes_match_statuses() {
    let cases = [
        ("single_matrix.json", 0, "consistent"),
        ("single_matrix_inconsistent.json", 1, "inconsistent"),
        ("five_fold_mos.json", 0, "consistent"),
        ("five_fold_mos_inconsistent.json", 1, "inconsistent"),
        ("unknown_folding.json", 1, "inconsistent"),
        ("unknown_folding_p244.json", 0, "consistent"),
        ("fold_count.json", 0, "consistent"),
    ];
    for (file, code, status) in cases {
        let out = scoreforge(&["run", &corpus(file)]);
        assert_eq!(out.status.code(), Some(code), "{file}: {}", stderr(&out));
        let v = json(&out);
        assert_eq!(v["status"], status, "{file}");
        for r in v["results"].as_array().unwrap() {
            if code == 1 {
                assert_eq!(r["status"], "inconsistent", "{file}");
            }
        }
    }
}

#[test]
fn unknown_folding_examines_every_configuration() {
    let v = json(&scoreforge(&["run", &corpus("unknown_folding.json")]));
    for r in v["results"].as_array().unwrap() {
        let entry = &r["verdicts"][0];
        assert_eq!(entry["status"], "inconsistent");
        assert_eq!(entry["configurations_examined"], 918);
    }
}

#[test]
fn mos_witness_lists_every_fold() {
    let v = json(&scoreforge(&["run", &corpus("unknown_folding_p244.json")]));
    let folds = v["results"][0]["verdicts"][0]["witnesses"][0]["folds"]
        .as_array()
        .unwrap();
    assert_eq!(folds.len(), 5);
    let total_p: u64 = folds.iter().map(|f| f["p"].as_u64().unwrap()).sum();
    assert_eq!(total_p, 244);
    for f in folds {
        assert!(f["tp"].as_u64().unwrap() <= f["p"].as_u64().unwrap());
        assert!(f["tn"].as_u64().unwrap() <= f["n"].as_u64().unwrap());
    }
}

#[test]
fn count_configs_only_counts() {
    let out = scoreforge(&["run", "--count-configs", &corpus("fold_count.json")]);
    assert_eq!(out.status.code(), Some(0));
    let d = &json(&out)["results"][0]["datasets"][0];
    assert_eq!(d["raw"], 673);
    assert_eq!(d["pruned"], 673);

    let v = json(&scoreforge(&[
        "run",
        "--count-configs",
        &corpus("unknown_folding.json"),
    ]));
    let d = &v["results"][0]["datasets"][0];
    assert_eq!(
        (d["raw"].as_u64(), d["pruned"].as_u64()),
        (Some(1468), Some(918))
    );
}

#[test]
fn output_is_reproducible_across_runs_and_thread_counts() {
    let file = corpus("unknown_folding.json");
    let a = scoreforge(&["run", "--jobs", "1", "--full-count", &file]);
    let b = scoreforge(&["run", "--jobs", "4", "--full-count", &file]);
    let c = Command::new(env!("CARGO_BIN_EXE_scoreforge"))
        .args(["run", "--full-count", &file])
        .env("SCOREFORGE_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let file = corpus("fold_count.json");
    let a = scoreforge(&["run", "--jobs", "1", &file]);
    let b = scoreforge(&["run", "--jobs", "6", &file]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn timing_is_opt_in() {
    let plain = json(&scoreforge(&["run", &corpus("single_matrix.json")]));
    assert!(plain.get("timing_ms").is_none());
    let timed = json(&scoreforge(&[
        "run",
        "--timing",
        &corpus("single_matrix.json"),
    ]));
    assert!(timed["timing_ms"].is_number());
    assert!(timed["results"][0]["timing_ms"].is_number());
}

#[test]
fn budgets_give_indeterminate() {
    let out = scoreforge(&[
        "run",
        "--budget-configs",
        "3",
        &corpus("unknown_folding.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"], "indeterminate");
    let entry = &v["results"][0]["verdicts"][0];
    assert_eq!(entry["configurations_examined"], 3);
    assert!(entry["reason"].as_str().unwrap().contains('3'));
}

const MIXED: &str = r#"{"schema_version": "1", "problems": [
    {"id": "b", "testset": {"p": 1000, "n": 6000}, "eps": 0.0001,
     "scores": {"acc": "0.6821", "npv": "0.9401", "f1": "0.4004"}},
    {"id": "a", "testset": {"p": 10, "n": 10}, "scores": {"acc": "0.55", "sens": "0.3", "spec": "0.3"}},
    {"id": "c", "testset": {"p": 100, "n": 200}, "folding": {"k": 5, "strategy": "stratified"},
     "aggregation": "unknown", "scores": {"acc": "0.9", "mcc": "0.7"}}
]}"#;

#[test]
fn batch_keeps_input_order_and_inconsistency_dominates() {
    let out = with_stdin(&["run", "--jobs", "3", "-"], MIXED);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let v = json(&out);
    let ids: Vec<&str> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["b", "a", "c"]);
    let statuses: Vec<&str> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["status"].as_str().unwrap())
        .collect();
    assert_eq!(statuses[..2], ["consistent", "inconsistent"]);
    let c = &v["results"][2]["verdicts"];
    assert_eq!(c[0]["assumption"], "mos");
    assert_eq!(c[0]["skipped_scores"][0], "mcc");
    assert_eq!(c[1]["assumption"], "som");
    assert_eq!(c[1]["totals"]["p"], 100);
}

#[test]
fn not_applicable_exits_zero() {
    let doc = r#"{"schema_version": "1", "problems": [
        {"id": "x", "testset": {"p": 50, "n": 50}, "folding": {"k": 5, "strategy": "stratified"},
         "aggregation": "mos", "scores": {"mcc": "0.5"}}]}"#;
    let out = with_stdin(&["run", "-"], doc);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["results"][0]["status"], "not_applicable");
}

#[test]
fn validate_reports_pointers_and_hints() {
    let ok = scoreforge(&["validate", &corpus("five_fold_mos.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(ok.stdout.is_empty());

    let typo = r#"{"schema_version": "1", "problems": [
        {"id": "x", "testset": {"p": 5, "n": 5}, "scores": {"acuracy": "0.5"}}]}"#;
    let out = with_stdin(&["validate", "-"], typo);
    assert_eq!(out.status.code(), Some(64));
    let err = stderr(&out);
    assert!(err.contains("/problems/0/scores/acuracy"), "{err}");
    assert!(err.contains(r#"did you mean "acc""#), "{err}");

    let negative = r#"{"schema_version": "1", "problems": [
        {"id": "x", "testset": {"p": 5, "n": 5}, "scores": {"acc": "0.5"}, "eps": -0.01}]}"#;
    let out = with_stdin(&["validate", "-"], negative);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr(&out).contains("/problems/0/eps"));

    let bad_type = r#"{"schema_version": "1", "problems": [
        {"id": "x", "testset": {"p": "five", "n": 5}, "scores": {"acc": "0.5"}}]}"#;
    let out = with_stdin(&["run", "-"], bad_type);
    assert_eq!(out.status.code(), Some(64));
    assert!(out.stdout.is_empty());
    assert!(
        stderr(&out).contains("/problems/0/testset/p"),
        "{}",
        stderr(&out)
    );

    let out = with_stdin(&["run", "-"], "{not json");
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(scoreforge(&["run"]).status.code(), Some(64));
    assert_eq!(
        scoreforge(&["run", "--jobs", "0", &corpus("single_matrix.json")])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        scoreforge(&["run", "--witnesses", "some", &corpus("single_matrix.json")])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        scoreforge(&["run", "/nonexistent/doc.json"]).status.code(),
        Some(64)
    );
    assert_eq!(scoreforge(&["--help"]).status.code(), Some(0));
}

#[test]
fn eps_precedence_explicit_then_document_then_flag() {
    // With p = n = 10 accuracy moves in steps of 0.05. "0.54" read as
    // floor/ceil allows [0.53, 0.55] and reaches 0.55; read as rounded it
    // allows [0.535, 0.545] and reaches nothing.
    let doc = |extra: &str| {
        format!(
            r#"{{"schema_version": "1", "problems": [
            {{"id": "x", "testset": {{"p": 10, "n": 10}}, "scores": {{"acc": "0.54"}}{extra}}}]}}"#
        )
    };
    let code = |args: &[&str], d: &str| with_stdin(args, d).status.code();
    assert_eq!(code(&["run", "-"], &doc("")), Some(0));
    assert_eq!(
        code(&["run", "--eps-mode", "round", "-"], &doc("")),
        Some(1)
    );
    assert_eq!(
        code(
            &["run", "--eps-mode", "round", "-"],
            &doc(r#", "eps_mode": "floor_ceil""#)
        ),
        Some(0)
    );
    assert_eq!(
        code(
            &["run", "--eps-mode", "floor-ceil", "-"],
            &doc(r#", "eps": 0.001"#)
        ),
        Some(1)
    );
}
