//! Command-line surface: exit codes, file handling, table output, and
//! the agreement subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn tempora(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempora")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn resolve_writes_reloadable_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.json");
    let out = tempora(&[
        "resolve",
        fixture("corpus_thursday.json").to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let loaded = tempora_core::format::load_output(&out_path).unwrap();
    assert_eq!(loaded.dialog_id, "corpus-thursday");
    assert_eq!(loaded.records.len(), 8);
    // round-trip: emit then re-load reproduces the structure
    let emitted = tempora_core::format::emit_output(&loaded).unwrap();
    let again: tempora_core::format::OutputFile = serde_json::from_str(&emitted).unwrap();
    assert_eq!(again, loaded);
}

#[test]
fn usage_error_exits_one() {
    let out = tempora(&["resolve"]);
    assert_eq!(out.status.code(), Some(1));
    let out = tempora(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(1));
    let out = tempora(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn schema_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dialog_id": "x", "utterances": []}"#).unwrap();
    let out = tempora(&["resolve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dialog_date"), "error must name the missing field");

    let missing = dir.path().join("nope.json");
    let out = tempora(&["resolve", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_tense_warns_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tense.json");
    std::fs::write(
        &path,
        r#"{
            "dialog_id": "tense",
            "dialog_date": "1993-08-16",
            "utterances": [
                {"utterance_id": 1, "speaker": "s1",
                 "alternatives": [{"parse_rank": 1, "tense": "subjunctive",
                                   "expressions": [{"weekday": "thu"}]}]}
            ]
        }"#,
    )
    .unwrap();
    let out = tempora(&["resolve", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("subjunctive"));
    // treated as tense "other": not suppressed, resolves normally
    assert!(stdout(&out).contains("\"start_weekday\": \"thu\""));
}

#[test]
fn evaluate_prints_per_field_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.json");
    let run = tempora(&[
        "resolve",
        fixture("corpus_thursday.json").to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(run.status.success());

    let rows_path = dir.path().join("rows.json");
    let out = tempora(&[
        "evaluate",
        "--system",
        out_path.to_str().unwrap(),
        "--key",
        fixture("corpus_thursday.key.json").to_str().unwrap(),
        "--per-field",
        "--output",
        rows_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for needle in ["Label", "Cor", "Inc", "Mis", "Ext", "Nul", "Acc", "Prec", "start", "end", "overall"] {
        assert!(text.contains(needle), "missing {needle} in:\n{text}");
    }
    assert!(text.contains("1.000"));

    // machine-readable rows land next to the table
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&rows_path).unwrap()).unwrap();
    assert_eq!(rows["rows"].as_array().unwrap().len(), 11);
    assert_eq!(rows["rows"][10]["label"], "overall");
}

#[test]
fn evaluate_rejects_mismatched_key() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.json");
    let run = tempora(&[
        "resolve",
        fixture("na2_wednesday.json").to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let out = tempora(&[
        "evaluate",
        "--system",
        out_path.to_str().unwrap(),
        "--key",
        fixture("corpus_thursday.key.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dialog_id"));
}

#[test]
fn lower_bound_counts_feed_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let counts_path = dir.path().join("lb.json");
    let out = tempora(&[
        "lower-bound",
        fixture("corpus_thursday.json").to_str().unwrap(),
        "--key",
        fixture("corpus_thursday.key.json").to_str().unwrap(),
        "--output",
        counts_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("overall:"));

    let out_path = dir.path().join("out.json");
    let run = tempora(&[
        "resolve",
        fixture("corpus_thursday.json").to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let out = tempora(&[
        "evaluate",
        "--system",
        out_path.to_str().unwrap(),
        "--key",
        fixture("corpus_thursday.key.json").to_str().unwrap(),
        "--per-field",
        "--lower-bound-counts",
        counts_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("AccLB"));
}

#[test]
fn resolve_multiple_dialogs_into_directory_with_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempora(&[
        "resolve",
        fixture("synth_01.json").to_str().unwrap(),
        fixture("synth_02.json").to_str().unwrap(),
        fixture("synth_03.json").to_str().unwrap(),
        "--jobs",
        "3",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["synth_01", "synth_02", "synth_03"] {
        let loaded =
            tempora_core::format::load_output(&dir.path().join(format!("{name}.out.json")))
                .unwrap();
        assert_eq!(loaded.records.len(), 8);
    }

    // multiple inputs without a directory target is a usage error
    let out = tempora(&[
        "resolve",
        fixture("synth_01.json").to_str().unwrap(),
        fixture("synth_02.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trace_reports_rules_and_antecedents() {
    let out = tempora(&[
        "resolve",
        fixture("a1_tuesday_jan30.json").to_str().unwrap(),
        "--trace",
    ]);
    assert!(out.status.success());
    let trace = stderr(&out);
    assert!(trace.contains("A1<-u1#0"), "trace:\n{trace}");
    // the output record itself carries the trace too
    let text = stdout(&out);
    assert!(text.contains("\"rule\": \"A1\""));
    assert!(text.contains("\"antecedent_utterance\": 1"));
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    // disable the tense filter: the suppressed utterance now resolves
    std::fs::write(&config_path, r#"{"tense_filter_enabled": false}"#).unwrap();
    let out = tempora(&[
        "resolve",
        fixture("synth_02.json").to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(!stdout(&out).contains("\"suppressed\": true"));

    let out = tempora(&["resolve", fixture("synth_02.json").to_str().unwrap()]);
    assert!(stdout(&out).contains("\"suppressed\": true"));

    // invalid settings are rejected up front
    std::fs::write(&config_path, r#"{"beam": 0}"#).unwrap();
    let out = tempora(&[
        "resolve",
        fixture("synth_02.json").to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn kappa_subcommand_reports_per_field() {
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("agreement.json");
    std::fs::write(
        &table_path,
        r#"{
            "fields": [
                {"field": "start_month",
                 "raters": ["c1", "c2", "expert"],
                 "items": [["aug", "aug", "aug"],
                           ["sep", "aug", "sep"],
                           ["null", "null", "null"],
                           ["aug", "aug", "aug"]]},
                {"field": "start_weekday",
                 "raters": ["c1", "c2", "expert"],
                 "items": [["thu", "thu", "thu"],
                           ["fri", "fri", "fri"]]}
            ]
        }"#,
    )
    .unwrap();
    let rows_path = dir.path().join("rows.json");
    let out = tempora(&[
        "kappa",
        table_path.to_str().unwrap(),
        "--expert",
        "expert",
        "--output",
        rows_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("start_month"));
    assert!(text.contains("kappa_avg"));
    // perfect agreement on the weekday table
    assert!(text.contains("start_weekday"));
    assert!(text.contains("1.000"));

    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&rows_path).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[1]["kappa"], 1.0);

    // degenerate table: kappa undefined
    std::fs::write(
        &table_path,
        r#"{"fields": [{"field": "x", "raters": ["a", "b"],
                        "items": [["same", "same"]]}]}"#,
    )
    .unwrap();
    let out = tempora(&["kappa", table_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
