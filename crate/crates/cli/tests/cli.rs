use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use refdiag::eval::{oracle_detection, oracle_segmentation, EvalDataset};
use refdiag::io::{read_manifest, write_predictions};

fn refdiag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refdiag"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = refdiag(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn dataset(dir: &Path, scenes: usize) {
    ok(
        dir,
        &[
            "--seed",
            "5",
            "gen-scenes",
            "--n",
            &scenes.to_string(),
            "--out",
            "scenes.jsonl",
        ],
    );
    ok(
        dir,
        &[
            "--seed",
            "5",
            "gen-refexps",
            "--scenes",
            "scenes.jsonl",
            "--per-image",
            "10",
            "--out",
            "manifest.json",
        ],
    );
}

#[test]
fn gen_scenes_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["gen-scenes", "--n", "100", "--seed", "1", "--out", "a.jsonl"],
    );
    ok(
        dir.path(),
        &["gen-scenes", "--n", "100", "--seed", "1", "--out", "b.jsonl"],
    );
    ok(
        dir.path(),
        &["gen-scenes", "--n", "100", "--seed", "2", "--out", "c.jsonl"],
    );
    let a = fs::read(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.jsonl")).unwrap());
    assert_ne!(a, fs::read(dir.path().join("c.jsonl")).unwrap());
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 100);
}

#[test]
fn ten_per_image_over_hundred_scenes() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 100);
    let manifest = read_manifest(&fs::read(dir.path().join("manifest.json")).unwrap()[..]).unwrap();
    assert_eq!(manifest.num_scenes, 100);
    assert_eq!(manifest.num_expressions, 1000);
    assert_eq!(manifest.expressions.len(), 1000);
    ok(dir.path(), &["validate", "--manifest", "manifest.json"]);
}

#[test]
fn validate_names_corrupted_expression() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 10);
    let path = dir.path().join("manifest.json");
    let mut value: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let expr = &mut value["expressions"][37];
    let id = expr["expression_id"].as_u64().unwrap();
    let ids = expr["referred_ids"].as_array_mut().unwrap();
    if ids.iter().any(|v| v == 0) {
        ids.retain(|v| v != 0);
    } else {
        ids.insert(0, 0.into());
    }
    fs::write(&path, serde_json::to_vec(&value).unwrap()).unwrap();

    let out = refdiag(dir.path(), &["validate", "--manifest", "manifest.json"]);
    assert_eq!(out.status.code(), Some(5));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(&format!("expression {id}")), "{stderr}");
}

#[test]
fn exit_codes_separate_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"generation": {"retry_cap": 0}}"#).unwrap();
    let out = refdiag(dir.path(), &["--config", "bad.json", "gen-scenes", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));

    ok(dir.path(), &["gen-scenes", "--n", "2", "--out", "scenes.jsonl"]);
    let text = fs::read_to_string(dir.path().join("scenes.jsonl")).unwrap();
    fs::write(
        dir.path().join("future.jsonl"),
        text.replace("\"format_version\":\"1.0\"", "\"format_version\":\"2.0\""),
    )
    .unwrap();
    let out = refdiag(dir.path(), &["render", "--scenes", "future.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));

    // One attempt per expression is not enough to find false premises in every small scene.
    fs::write(
        dir.path().join("tight.json"),
        r#"{"scene": {"min_objects": 3, "max_objects": 3}, "generation": {"retry_cap": 1}}"#,
    )
    .unwrap();
    ok(
        dir.path(),
        &[
            "--config",
            "tight.json",
            "gen-scenes",
            "--n",
            "20",
            "--out",
            "small.jsonl",
        ],
    );
    let out = refdiag(
        dir.path(),
        &[
            "--config",
            "tight.json",
            "gen-false-premise",
            "--scenes",
            "small.jsonl",
            "--out",
            "fp.json",
        ],
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scoring_commands_accept_oracle_predictions() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 8);
    let manifest = read_manifest(&fs::read(dir.path().join("manifest.json")).unwrap()[..]).unwrap();
    let data = EvalDataset::new(&manifest).unwrap();
    let mut seg = Vec::new();
    write_predictions(&mut seg, &oracle_segmentation(&data).unwrap()).unwrap();
    fs::write(dir.path().join("seg.jsonl"), seg).unwrap();
    let mut det = Vec::new();
    write_predictions(&mut det, &oracle_detection(&data)).unwrap();
    fs::write(dir.path().join("det.jsonl"), det).unwrap();

    let out = ok(
        dir.path(),
        &[
            "score-seg",
            "--manifest",
            "manifest.json",
            "--predictions",
            "seg.jsonl",
            "--out",
            "r.json",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("cumIoU=1.0000"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["overall"]["count"], 80);

    let out = ok(
        dir.path(),
        &["score-det", "--manifest", "manifest.json", "--predictions", "det.jsonl"],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("acc=1.0000"));

    let out = ok(
        dir.path(),
        &[
            "score-steps",
            "--manifest",
            "manifest.json",
            "--predictions",
            "seg.jsonl",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("unique"));

    // Mask predictions on the detection track are an evaluation error.
    let out = refdiag(
        dir.path(),
        &["score-det", "--manifest", "manifest.json", "--predictions", "seg.jsonl"],
    );
    assert_eq!(out.status.code(), Some(6));

    let out = ok(dir.path(), &["audit-bias", "--manifest", "manifest.json"]);
    let audit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(audit["expressions"], 80);
}
