use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mpap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpap"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn text(out: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    )
}

fn synth_with_features(dir: &Path, n: usize) {
    let d = dir.to_str().unwrap();
    let out = mpap(&["synth", "--out", d, "--n", &n.to_string(), "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let out = mpap(&["features", "--in", d]);
    assert_eq!(code(&out), 0, "{}", text(&out));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&mpap(&["--help"])), 0);
    assert_eq!(code(&mpap(&["--version"])), 0);
    assert_eq!(code(&mpap(&["run", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&mpap(&[])), 1);
    assert_eq!(code(&mpap(&["fly"])), 1);
    let base = ["run", "--in", "x", "--out", "y", "--task", "regression"];
    assert_eq!(
        code(&mpap(&[&base[..], &["--mode", "xgboost"]].concat())),
        1
    );
    let out = mpap(&[&base[..], &["--mode", "gbdt", "--groups", "lab"]].concat());
    assert_eq!(code(&out), 1);
    assert!(text(&out).contains("lab"), "{}", text(&out));
    assert_eq!(
        code(&mpap(
            &[&base[..], &["--mode", "gbdt", "--cv", "kfold1"]].concat()
        )),
        1
    );
    assert_eq!(
        code(&mpap(
            &[&base[..], &["--mode", "gbdt", "--strategy", "best"]].concat()
        )),
        1
    );
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = mpap(&[
        "tune",
        "--in",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--task",
        "regression",
        "--mode",
        "gbdt",
    ]);
    assert_eq!(code(&out), 2);
    assert!(text(&out).contains("nope.csv"), "{}", text(&out));
    assert_eq!(
        code(&mpap(&["report", "--in", dir.path().to_str().unwrap()])),
        2
    );
}

#[test]
fn physics_columns_must_be_computed_first() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&mpap(&["synth", "--out", d, "--n", "20"])), 0);
    let cohort = dir.path().join("cohort.csv");
    let out = mpap(&[
        "run",
        "--in",
        cohort.to_str().unwrap(),
        "--out",
        d,
        "--task",
        "regression",
        "--mode",
        "gbdt",
        "--budget",
        "2",
    ]);
    assert_eq!(code(&out), 2, "{}", text(&out));
    assert!(text(&out).contains("mpap features"), "{}", text(&out));
}

#[test]
fn regression_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    synth_with_features(dir.path(), 40);
    let out_dir = dir.path().join("reg");
    let out = mpap(&[
        "run",
        "--in",
        dir.path().to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--task",
        "regression",
        "--mode",
        "dart",
        "--groups",
        "physics,mri",
        "--budget",
        "6",
        "--space",
        "compact",
        "--cv",
        "kfold8",
    ]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    assert!(text(&out).contains("MAE"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["task"], "regression");
    assert_eq!(report["groups"], "physics+mri");
    assert_eq!(report["n_samples"], 40);
    assert_eq!(report["n_features"], 43);
    assert!(report["regression"]["metrics"]["mae"].as_f64().unwrap() > 0.0);
    assert!(report["classification"].is_null());

    let scatter = fs::read_to_string(out_dir.join("scatter.csv")).unwrap();
    assert!(scatter.starts_with("measured,predicted\n"));
    assert_eq!(scatter.lines().count(), 41);
    let history = fs::read_to_string(out_dir.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 7);
    assert!(
        history.starts_with("iteration,objective,n_trees"),
        "{history}"
    );
    let best: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("best_config.json")).unwrap())
            .unwrap();
    assert_eq!(best["mode"], "dart");

    let shown = mpap(&["report", "--in", out_dir.to_str().unwrap()]);
    assert_eq!(code(&shown), 0);
    assert!(text(&shown).contains("MAE"));
}

#[test]
fn classification_run_writes_roc() {
    let dir = tempfile::tempdir().unwrap();
    synth_with_features(dir.path(), 40);
    let out_dir = dir.path().join("cls");
    let out = mpap(&[
        "run",
        "--in",
        dir.path().to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--task",
        "classification",
        "--mode",
        "goss",
        "--budget",
        "4",
        "--space",
        "compact",
        "--cv",
        "stratified4",
        "--strategy",
        "youden",
    ]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let roc = fs::read_to_string(out_dir.join("roc.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr,threshold\n0,0,inf\n"), "{roc}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["classification"]["selected"], "youden");
    assert_eq!(
        report["classification"]["strategies"]
            .as_array()
            .unwrap()
            .len(),
        4
    );
}

#[test]
fn bad_waveform_names_the_patient_and_can_be_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&mpap(&["synth", "--out", d, "--n", "12"])), 0);
    fs::write(
        dir.path().join("waveforms/patient_0003.csv"),
        "t,flow,area\n0,1,-1\n",
    )
    .unwrap();

    let out = mpap(&["features", "--in", d]);
    assert_eq!(code(&out), 2, "{}", text(&out));
    assert!(text(&out).contains("patient 3"), "{}", text(&out));

    let out = mpap(&["features", "--in", d, "--skip-failures"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    assert!(text(&out).contains("11 of 12"), "{}", text(&out));
    let rows = fs::read_to_string(dir.path().join("features.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 12);
}
