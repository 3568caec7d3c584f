use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn covedu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covedu")).args(args).output().unwrap()
}

fn conf() -> String {
    fixtures().join("run.conf").to_string_lossy().into_owned()
}

#[test]
fn run_succeeds_and_matches_golden_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_string_lossy().into_owned();
    let res = covedu(&["run", "--config", &conf(), "--out-dir", &out, "--threads", "2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("filter: records=117"), "{stderr}");
    let golden = fixtures().join("../tests/golden/report");
    for entry in fs::read_dir(&golden).unwrap() {
        let entry = entry.unwrap();
        let got = fs::read(tmp.path().join(entry.file_name())).unwrap();
        assert_eq!(got, fs::read(entry.path()).unwrap(), "{:?}", entry.file_name());
    }
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_string_lossy().into_owned();
    let res = covedu(&["run", "--config", &conf(), "--out-dir", &out, "--report-countries", "US,GB"]);
    assert!(res.status.success());
    let corr = fs::read_to_string(tmp.path().join("correlations.csv")).unwrap();
    let countries: Vec<&str> = corr.lines().skip(1).map(|l| &l[..2]).collect();
    assert_eq!(countries, ["GB", "US"]);
}

#[test]
fn check_validates_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = covedu(&["check", "--config", &conf(), "--out-dir", &out.to_string_lossy()]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("gazetteer: ok"));
    assert!(!out.exists());
}

#[test]
fn exit_codes() {
    assert_eq!(covedu(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(covedu(&["filter", "--threads", "many"]).status.code(), Some(1));
    assert_eq!(covedu(&["filter", "--input", "/nonexistent.ndjson"]).status.code(), Some(1));

    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_string_lossy().into_owned();
    let model = fixtures().join("model_d4.txt").to_string_lossy().into_owned();
    let res = covedu(&["run", "--config", &conf(), "--out-dir", &out, "--model", &model]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("dimension 4") && stderr.contains("dimension 8"), "{stderr}");
}

#[test]
fn embeddings_flag_replaces_test_embedder_from_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_string_lossy().into_owned();
    let emb = fixtures().join("embeddings_d4.txt").to_string_lossy().into_owned();
    let model = fixtures().join("model_d4.txt").to_string_lossy().into_owned();
    let res = covedu(&["run", "--config", &conf(), "--out-dir", &out, "--embeddings", &emb, "--model", &model]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stderr = String::from_utf8_lossy(&res.stderr);
    let classify = stderr.lines().find(|l| l.starts_with("classify:")).unwrap();
    let count = |key: &str| -> u64 {
        let field = classify.split(' ').find_map(|f| f.strip_prefix(&format!("{key}="))).unwrap();
        field.parse().unwrap()
    };
    assert!(count("missing_embedding") > 0);
    assert_eq!(count("records"), count("positive") + count("negative"));
    assert_eq!(count("records") + count("missing_embedding"), 117);
}

#[test]
fn bench_reports_throughput() {
    let res = covedu(&["bench", "--config", &conf(), "--records", "2000"]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("records/s"));
}
