use std::path::Path;
use std::process::{Command, Output};

use kinsyn::perception::features::FEATURE_DIM;
use kinsyn::perception::{svm_train, SvmParams};

fn kinsyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinsyn")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// A two-class model with the right feature width; enough for runs that never classify.
fn toy_svm(path: &Path) {
    let data: Vec<(Vec<f64>, String)> = (0..8)
        .map(|i| {
            let mut x = vec![0.0; FEATURE_DIM];
            x[i % 2] = 1.0 + 0.01 * i as f64;
            (x, format!("class{}", i % 2))
        })
        .collect();
    svm_train(&data, &SvmParams::default(), 0).unwrap().save(path).unwrap();
}

#[test]
fn version_lists_schemas() {
    let out = kinsyn(&["--version"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("kinsyn 0.1.0"));
    for schema in ["synergy.v1", "gmm.v1", "kmp.v1", "svm.v1", "frames.v1", "grasp.v1", "task.v1"] {
        assert!(text.contains(schema), "{schema} missing from `{text}`");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&kinsyn(&["no-such-command"])), 2);
    assert_eq!(code(&kinsyn(&["eval", "--methods", "a,z", "--out", "/tmp"])), 2);
    assert_eq!(code(&kinsyn(&["--params", "nope=1", "params"])), 2);
}

#[test]
fn too_many_components_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let demos = dir.path().join("demos.csv");
    assert_eq!(code(&kinsyn(&["gen-demos", "--out", &s(&demos)])), 0);
    let out = kinsyn(&["teach", "--demos", &s(&demos), "--components", "7", "--out", &s(&dir.path().join("syn.json"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn adapt_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| s(&dir.path().join(n));
    assert_eq!(code(&kinsyn(&["gen-demos", "--out", &p("demos.csv")])), 0);
    assert_eq!(
        code(&kinsyn(&["teach", "--demos", &p("demos.csv"), "--out", &p("syn.json"), "--gmm-out", &p("gmm.json")])),
        0
    );
    let bad = kinsyn(&["adapt", "--gmm", &p("gmm.json"), "--via", "0.5,abc", "--out", &p("k.json"), "--trajectory-out", &p("t.csv")]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("--via"));
    let short = kinsyn(&["adapt", "--gmm", &p("gmm.json"), "--end", "1.0,0.1", "--out", &p("k.json"), "--trajectory-out", &p("t.csv")]);
    assert_eq!(code(&short), 2);

    let ok = kinsyn(&[
        "adapt", "--gmm", &p("gmm.json"), "--end", "1.0,0.1,-0.2,1e-6,1e-6", "--out", &p("k.json"), "--trajectory-out", &p("t.csv"),
    ]);
    assert_eq!(code(&ok), 0);
    let (header, rows) = kinsyn::io::read_numeric_csv(dir.path().join("t.csv")).unwrap();
    assert_eq!(header[0], "t");
    let last = rows.last().unwrap();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - 0.1).abs() < 1e-3 && (last[2] + 0.2).abs() < 1e-3, "{last:?}");
}

#[test]
fn missing_frames_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| s(&dir.path().join(n));
    toy_svm(&dir.path().join("svm.json"));
    assert_eq!(code(&kinsyn(&["gen-scene", "--objects", "sphere_white", "--out", &p("scene.pcd")])), 0);
    let out = kinsyn(&[
        "detect", "--scene", &p("scene.pcd"), "--svm", &p("svm.json"), "--frames", &p("absent.json"), "--out", &p("d.csv"),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn empty_scene_has_no_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| s(&dir.path().join(n));
    toy_svm(&dir.path().join("svm.json"));
    let spec = kinsyn::perception::SceneSpec::new(Vec::new());
    kinsyn::io::write_json(dir.path().join("empty.json"), &spec).unwrap();
    assert_eq!(code(&kinsyn(&["gen-scene", "--spec", &p("empty.json"), "--out", &p("scene.pcd")])), 0);
    let out = kinsyn(&["detect", "--scene", &p("scene.pcd"), "--svm", &p("svm.json"), "--out", &p("d.csv")]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("no candidates"));
    let text = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert_eq!(text.lines().count(), 1, "header only: {text}");
}

#[test]
fn grasp_runs_a_bundled_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/tasks/bulb.grasp.v1.json");
    let out = kinsyn(&["grasp", "--scenario", &s(&scenario), "--out", &s(&dir.path().join("trace.csv"))]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("reached"));
    let (header, rows) = kinsyn::io::read_numeric_csv(dir.path().join("trace.csv")).unwrap();
    assert_eq!(header.last().unwrap(), "current");
    let force = header.iter().position(|h| h == "fc_norm").unwrap();
    assert!((rows.last().unwrap()[force] - 3.57).abs() <= 0.05 * 3.57);
}

#[test]
fn eval_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = kinsyn(&["eval", "--methods", "a,b", "--components", "2", "--out", &s(dir.path())]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("method,components,nse,pa,runtime_ms"));
    assert_eq!(csv.lines().count(), 3);
    assert!(std::fs::read_to_string(dir.path().join("report.svg")).unwrap().starts_with("<svg"));
}
