use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/psi.scenario")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppmlrank"))
        .args(args)
        .output()
        .expect("spawn ppmlrank")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("ppmlrank-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn validate_reports_counts_and_violations() {
    let f = fixture();
    let ok = run(&["validate", "--scenario", f.to_str().unwrap()]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("15 UACs, 14 characteristics (3 hard), 6 techniques"));

    let dir = tmp_dir("validate");
    let bad = dir.join("bad.scenario");
    let text = std::fs::read_to_string(&f).unwrap().replacen("\"schemaVersion\": 1", "\"schemaVersion\": 9", 1);
    std::fs::write(&bad, text).unwrap();
    let out = run(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("SCHEMA_VERSION_UNSUPPORTED"));
}

#[test]
fn rank_table_names_the_winner() {
    let f = fixture();
    let out = run(&["rank", "--scenario", f.to_str().unwrap(), "--audience", "entity"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("HE"));
    assert!(text.contains("0.527909") || text.contains("0.52791"));
}

#[test]
fn export_writes_structured_report() {
    let f = fixture();
    let dir = tmp_dir("export");
    let target = dir.join("report.json");
    let out = run(&[
        "export",
        "--scenario",
        f.to_str().unwrap(),
        "--format",
        "json",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["ordering"][0], "FL+LDP");
    assert!(!v["notes"].as_array().unwrap().is_empty());
}

#[test]
fn ahp_on_synthetic_survey_rejects_one_pc_matrix() {
    let f = fixture();
    let survey = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/synthetic_survey.json");
    let out = run(&[
        "ahp",
        "--scenario",
        f.to_str().unwrap(),
        "--survey",
        survey.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("rejected p3"));
    assert!(text.contains("UAC preferences:"));
}

#[test]
fn sensitivity_finds_reversal_on_accuracy() {
    let f = fixture();
    let out = run(&[
        "sensitivity",
        "--scenario",
        f.to_str().unwrap(),
        "--parameter",
        "characteristic:accuracy",
        "--lo",
        "-0.2",
        "--hi",
        "0.2",
        "--steps",
        "41",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("top technique changes at"));
}

#[test]
fn unknown_parameter_exits_with_error() {
    let f = fixture();
    let out = run(&["sensitivity", "--scenario", f.to_str().unwrap(), "--parameter", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}
