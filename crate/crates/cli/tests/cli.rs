use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn scripted(name: &str) -> String {
    format!("scripted:{}", fixture(name).display())
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_t2v-refine")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn jsonl(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn refine_accepted_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let backend = scripted("casestudy.json");
    let out = run(&[
        "refine",
        "--prompt",
        "hope blooming in the dark",
        "--backend",
        &backend,
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("appears as if from nowhere"));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(summary["rounds_used"], 3);
    assert_eq!(summary["accepted"], true);
    let coverage: Vec<f64> = summary["rounds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["coverage"].as_f64().unwrap())
        .collect();
    assert_eq!(coverage, [0.25, 0.75, 1.0]);
}

#[test]
fn refine_full_verbosity() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let backend = scripted("casestudy.json");
    let out = run(&[
        "refine",
        "--prompt",
        "hope blooming in the dark",
        "--backend",
        &backend,
        "--verbosity",
        "full",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let full: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let matrix = full["rounds"][0]["report"]["similarity"].as_array().unwrap();
    assert_eq!(matrix.len(), 4);
    assert_eq!(full["exchanges"].as_array().unwrap().len(), 18);
}

#[test]
fn refine_exhausted_exits_two() {
    let backend = scripted("never_accepts.json");
    let out = run(&["refine", "--prompt", "A red kite.", "--backend", &backend, "--max-rounds", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not accepted after 2 rounds"));
    assert!(!stdout(&out).trim().is_empty());
}

#[test]
fn refine_errors_exit_one() {
    let out = run(&["refine", "--prompt", "x", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("error: cannot read /nonexistent/config.json"), "{err}");
    assert_eq!(err.matches("No such file").count(), 1, "{err}");

    let backend = scripted("casestudy.json");
    let out = run(&["refine", "--prompt", "x", "--backend", &backend, "--max-rounds", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn refine_failure_keeps_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    std::fs::write(&script, r#"[{"role": "router", "content": "{\"label\": \"Non-difficult\", \"reason\": \"x\"}"}]"#).unwrap();
    let trace = dir.path().join("partial.json");
    let backend = format!("scripted:{}", script.display());
    let out = run(&["refine", "--prompt", "A kite.", "--backend", &backend, "--trace", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("policy"), "{}", stderr(&out));
    let partial: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(partial["routing"]["tag"], "Non-difficult");
}

#[test]
fn config_file_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"pipeline": {"max_rounds": 1}}"#).unwrap();
    let backend = scripted("never_accepts.json");
    let out = run(&["refine", "--prompt", "A red kite.", "--backend", &backend, "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("after 1 rounds"));

    std::fs::write(&config, r#"{"pipeline": {"max_round": 1}}"#).unwrap();
    let out = run(&["refine", "--prompt", "A red kite.", "--backend", &backend, "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("invalid config"));
}

#[test]
fn batch_three_records() {
    let input = fixture("batch_demo.jsonl");
    let backend = scripted("batch_demo.json");
    let out = run(&["batch", "--input", input.to_str().unwrap(), "--backend", &backend]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let results = jsonl(&stdout(&out));
    assert_eq!(results.len(), 3);
    for (i, r) in results.iter().enumerate() {
        assert_eq!(r["line"], i + 1);
        assert_eq!(r["rounds_used"], 1);
        assert_eq!(r["accepted"], true);
        assert_eq!(r["status"], "accepted");
    }
    let ids: Vec<&str> = results.iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["r1", "r2", "r3"]);
}

#[test]
fn batch_reports_bad_lines_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    let good = std::fs::read_to_string(fixture("batch_demo.jsonl")).unwrap();
    let lines: Vec<&str> = good.lines().collect();
    let text = format!("{}\n{{broken\n\n{}\n{}\n", lines[0], lines[1], lines[1]);
    std::fs::write(&input, text).unwrap();
    let output = dir.path().join("out.jsonl");
    let backend = scripted("batch_demo.json");
    let out = run(&[
        "batch",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
        "--backend",
        &backend,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let results = jsonl(&std::fs::read_to_string(&output).unwrap());
    let status: Vec<&str> = results.iter().map(|r| r["status"].as_str().unwrap()).collect();
    assert_eq!(status, ["accepted", "error", "error", "accepted", "error"]);
    assert_eq!(results[1]["id"], "line-2");
    assert_eq!(results[2]["error"], "blank line");
    assert_eq!(results[4]["error"], "duplicate record id");
}

#[test]
fn batch_output_ignores_worker_count() {
    let input = fixture("batch_demo.jsonl");
    let backend = scripted("batch_demo.json");
    let outputs: Vec<String> = ["1", "2", "8"]
        .iter()
        .map(|w| stdout(&run(&["batch", "--input", input.to_str().unwrap(), "--backend", &backend, "--workers", w])))
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let out = run(&["batch", "--input", input.to_str().unwrap(), "--backend", &backend, "--workers", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stats_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("results.jsonl");
    let input = fixture("batch_demo.jsonl");
    let backend = scripted("batch_demo.json");
    let out = run(&[
        "batch",
        "--input",
        input.to_str().unwrap(),
        "--backend",
        &backend,
        "--output",
        results.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let text = run(&["stats", "--input", results.to_str().unwrap()]);
    assert_eq!(text.status.code(), Some(0));
    let text = stdout(&text);
    assert!(text.contains("acceptance rate: 100.00% (3/3)"), "{text}");
    assert!(text.contains("    1       3  100.00%"), "{text}");

    let json = run(&["stats", "--input", results.to_str().unwrap(), "--format", "json"]);
    let report: Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(report["rounds"]["total"], 3);
    assert_eq!(report["rounds"]["buckets"][0]["percent"], 100.0);
    assert_eq!(report["tags"]["Non-difficult"]["count"], 1);
}

#[test]
fn stats_without_results_fails() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "\n").unwrap();
    let out = run(&["stats", "--input", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no results"));

    std::fs::write(&empty, "{\"nope\": 1}\n").unwrap();
    let out = run(&["stats", "--input", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"));
}
