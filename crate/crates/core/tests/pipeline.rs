mod common;

use std::fs;
use std::path::Path;

use covedu::pipeline::{self, PipelineConfig, RawConfig, Stage};
use covedu::Error;

use common::fixture;

fn config(out: &Path, overrides: &[(&str, &str)]) -> PipelineConfig {
    let mut raw = RawConfig::from_file(&fixture("run.conf")).unwrap();
    raw.set("out_dir", out.to_string_lossy()).unwrap();
    for (k, v) in overrides {
        raw.set(k, *v).unwrap();
    }
    raw.build().unwrap()
}

#[test]
fn run_equals_individual_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let whole = config(&tmp.path().join("run"), &[]);
    let staged = config(&tmp.path().join("staged"), &[]);
    let run: Vec<String> = pipeline::cmd_run(&whole).unwrap().into_iter().map(|a| a.digest).collect();
    let manual = [
        pipeline::cmd_filter(&staged).unwrap().digest,
        pipeline::cmd_geotag(&staged).unwrap().digest,
        pipeline::cmd_classify(&staged).unwrap().digest,
        pipeline::cmd_aggregate(&staged).unwrap().digest,
    ];
    assert_eq!(run, manual);
}

#[test]
fn rerunning_a_stage_reproduces_its_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &[]);
    pipeline::cmd_filter(&cfg).unwrap();
    let first = pipeline::cmd_geotag(&cfg).unwrap();
    let second = pipeline::cmd_geotag(&cfg).unwrap();
    assert_eq!(first, second);
}

#[test]
fn stage_files_are_sorted_and_annotated() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &[]);
    pipeline::cmd_run(&cfg).unwrap();
    let text = fs::read_to_string(cfg.stage_file(pipeline::CLASSIFIED)).unwrap();
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 117);
    let keys: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r["created_at"].as_str().unwrap().to_string(), r["id"].as_str().unwrap().to_string()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for r in &rows {
        assert!(!r["covid_terms"].as_array().unwrap().is_empty());
        assert!(!r["education_terms"].as_array().unwrap().is_empty());
        assert!(r["geo"]["ambiguous"].is_boolean());
        assert!(r["label"] == 0 || r["label"] == 1);
    }
}

#[test]
fn empty_corpus_keeps_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("empty.ndjson");
    fs::write(&input, "").unwrap();
    let cfg = config(&tmp.path().join("out"), &[("input", &input.to_string_lossy())]);
    let artifacts = pipeline::cmd_run(&cfg).unwrap();
    assert_eq!(artifacts[0].records, 0);
    let summary = fs::read_to_string(tmp.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("warning: no located records"));
    let corr = fs::read_to_string(tmp.path().join("out/correlations.csv")).unwrap();
    assert_eq!(corr, "country,n_weeks,r_total,r_positive,r_negative\n");
}

#[test]
fn missing_lexicon_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &[("covid_lexicon", "/nonexistent/covid.txt")]);
    let err = pipeline::cmd_filter(&cfg).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/covid.txt"), "{err}");
    assert_ne!(err.exit_code(), 0);
}

#[test]
fn empty_gazetteer_after_allowlist_is_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &[("countries", "ZZ")]);
    pipeline::cmd_filter(&cfg).unwrap();
    let err = pipeline::cmd_geotag(&cfg).unwrap_err();
    assert!(matches!(err, Error::EmptyGazetteer), "{err}");
    assert_eq!(err.to_string(), "empty gazetteer");
}

#[test]
fn dimension_mismatch_names_both_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let model = fixture("model_d4.txt");
    let cfg = config(tmp.path(), &[("model", &model.to_string_lossy())]);
    pipeline::cmd_filter(&cfg).unwrap();
    pipeline::cmd_geotag(&cfg).unwrap();
    let msg = pipeline::cmd_classify(&cfg).unwrap_err().to_string();
    assert!(msg.contains('4') && msg.contains('8'), "{msg}");
}

#[test]
fn missing_embeddings_are_skipped_or_fatal_in_strict_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let emb = fixture("embeddings_d4.txt").to_string_lossy().into_owned();
    let model = fixture("model_d4.txt").to_string_lossy().into_owned();
    let mut raw = RawConfig::from_file(&fixture("run.conf")).unwrap();
    raw.set("out_dir", tmp.path().to_string_lossy()).unwrap();
    raw.set("test_embedder", "").unwrap();
    raw.set("embeddings", emb).unwrap();
    raw.set("model", model).unwrap();
    let cfg = raw.build().unwrap();
    pipeline::cmd_filter(&cfg).unwrap();
    pipeline::cmd_geotag(&cfg).unwrap();
    let classified = pipeline::cmd_classify(&cfg).unwrap();
    let labelled = classified.counts["positive"] + classified.counts["negative"];
    assert_eq!(labelled + classified.counts["missing_embedding"], 117);
    assert!(classified.counts["missing_embedding"] > 0);
    assert_eq!(classified.records as u64, labelled);

    raw.set("strict", "true").unwrap();
    let strict = raw.build().unwrap();
    assert!(pipeline::cmd_classify(&strict).unwrap_err().to_string().contains("no embedding"));
}

#[test]
fn out_dir_that_is_a_file_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("taken");
    fs::write(&file, "x").unwrap();
    let cfg = config(&file, &[]);
    let err = pipeline::cmd_run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn validation_fails_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(&tmp.path().join("out"), &[("cases", "/nonexistent/cases.csv")]);
    assert!(cfg.validate(&[Stage::Aggregate]).is_err());
    assert!(pipeline::cmd_run(&cfg).is_err());
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn strict_mode_aborts_on_the_first_bad_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &[("strict", "true")]);
    let err = pipeline::cmd_filter(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("corpus.ndjson"), "{err}");
}

#[test]
fn check_reports_every_configured_input() {
    let tmp = tempfile::tempdir().unwrap();
    let lines = pipeline::cmd_check(&config(tmp.path(), &[])).unwrap();
    for key in ["input", "lexicons", "gazetteer", "model", "cases"] {
        assert!(lines.iter().any(|l| l.starts_with(key)), "{key} missing from {lines:?}");
    }
    let bad = tmp.path().join("cases.csv");
    fs::write(&bad, "day,where,n\n").unwrap();
    let err = pipeline::cmd_check(&config(tmp.path(), &[("cases", &bad.to_string_lossy())])).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
