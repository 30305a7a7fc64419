use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_bisect");

fn scenes() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn bisect")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn out_path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const UNIT_SCENE: &str = r#"{
  "manifold": {"kind": "box", "bounds": [[0, 4], [0, 4]]},
  "family": "pair",
  "elements": [{"x": [1, 1], "y": [1, 1]}]
}"#;

const MOVER_SCENE: &str = r#"{
  "manifold": {"kind": "box", "bounds": [[0, 4], [0, 4]]},
  "family": "pair",
  "elements": [{"x": [1.5, 2], "y": [2.5, 2]}],
  "region": {"kind": "ball", "center": [2, 2], "radius": 1},
  "options": {"samples": 40}
}"#;

#[test]
fn unit_element_gives_the_empty_word() {
    let dir = TempDir::new().unwrap();
    let scene = write(&dir, "unit.json", UNIT_SCENE);
    let out = out_path(&dir, "r.json");
    let o = run(&["construct", "--scene", &scene, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert_eq!(r["word"]["generators"].as_array().unwrap().len(), 0);
    for key in ["word", "report", "chains", "ordering", "residuals"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert!(r.get("timestamp").is_none());

    let o = run(&["verify", &out, "--scene", &scene, "--samples", "20"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn five_point_scene_succeeds() {
    let dir = TempDir::new().unwrap();
    let scene = scenes().join("independent-5.json");
    let out = out_path(&dir, "r.json");
    let o = run(&["construct", "--scene", scene.to_str().unwrap(), "--out", &out, "--samples", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    let res = r["residuals"].as_array().unwrap();
    assert_eq!(res.len(), 5);
    for v in res {
        assert!(v["base"].as_f64().unwrap() <= 1e-6);
    }
}

#[test]
fn duplicated_source_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let scene = write(
        &dir,
        "dup.json",
        r#"{"manifold": {"kind": "box", "bounds": [[0, 4], [0, 4]]},
            "family": "pair",
            "elements": [{"x": [1, 1], "y": [2, 2]}, {"x": [1, 1], "y": [3, 3]}]}"#,
    );
    let o = run(&["construct", "--scene", &scene, "--out", &out_path(&dir, "r.json")]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pairwise distinct sources"), "{err}");
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn schema_errors_exit_with_1_and_name_the_line() {
    let dir = TempDir::new().unwrap();
    let scene = write(
        &dir,
        "bad.json",
        "{\n  \"manifold\": {\"kind\": \"box\", \"bounds\": [[0, 4], [0, 4]]},\n  \"family\": \"pair\",\n  \"elements\": [{\"x\": [1, 1], \"y\": [2, 2]}],\n  \"colour\": 3\n}",
    );
    let o = run(&["construct", "--scene", &scene, "--out", &out_path(&dir, "r.json")]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));

    let o = run(&["construct", "--scene", &out_path(&dir, "missing.json"), "--out", &out_path(&dir, "r.json")]);
    assert_eq!(code(&o), 1);

    let good = write(&dir, "unit.json", UNIT_SCENE);
    let word = write(&dir, "word.json", "{\"family\": \"pair\"");
    assert_eq!(code(&run(&["verify", &word, "--scene", &good])), 1);
}

#[test]
fn planning_failure_exits_with_3() {
    let dir = TempDir::new().unwrap();
    // a fixed point blocks the only corridor
    let scene = write(
        &dir,
        "corridor.json",
        r#"{"manifold": {"kind": "box", "bounds": [[0, 4], [0, 4]]},
            "family": "pair",
            "elements": [{"x": [1, 2], "y": [3, 2]}, {"x": [2, 2], "y": [2, 2]}],
            "region": {"kind": "box", "lower": [0.5, 1.95], "upper": [3.5, 2.05]}}"#,
    );
    let o = run(&["construct", "--scene", &scene, "--out", &out_path(&dir, "r.json")]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn constructed_word_reverifies_with_the_same_residuals() {
    let dir = TempDir::new().unwrap();
    let scene = write(&dir, "mover.json", MOVER_SCENE);
    let out = out_path(&dir, "r.json");
    assert_eq!(code(&run(&["construct", "--scene", &scene, "--out", &out])), 0);
    let report = out_path(&dir, "v.json");
    let o = run(&["verify", &out, "--scene", &scene, "--out", &report]);
    assert_eq!(code(&o), 0);
    let (a, b) = (json(&out), json(&report));
    for (x, y) in a["residuals"].as_array().unwrap().iter().zip(b["residuals"].as_array().unwrap()) {
        for k in ["base", "fiber"] {
            assert!((x[k].as_f64().unwrap() - y[k].as_f64().unwrap()).abs() <= 1e-12);
        }
    }
    // verify is deterministic
    let o2 = run(&["verify", &out, "--scene", &scene]);
    assert_eq!(o.stdout, o2.stdout);
}

#[test]
fn tampered_sign_fails_verification() {
    let dir = TempDir::new().unwrap();
    let scene = write(&dir, "mover.json", MOVER_SCENE);
    let out = out_path(&dir, "r.json");
    assert_eq!(code(&run(&["construct", "--scene", &scene, "--out", &out])), 0);
    let mut r = json(&out);
    let sign = &mut r["word"]["generators"][0]["sign"];
    *sign = serde_json::json!(-sign.as_i64().unwrap());
    let bad = write(&dir, "bad.json", &r["word"].to_string());
    assert_eq!(code(&run(&["verify", &bad, "--scene", &scene])), 4);
}

#[test]
fn identity_grid() {
    let dir = TempDir::new().unwrap();
    let scene = write(&dir, "unit.json", UNIT_SCENE);
    let out = out_path(&dir, "r.json");
    assert_eq!(code(&run(&["construct", "--scene", &scene, "--out", &out])), 0);
    let csv = out_path(&dir, "g.csv");
    assert_eq!(code(&run(&["grid", &out, "--resolution", "3", "--out", &csv])), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,y1,y2");
    assert_eq!(lines.len(), 10);
    for l in &lines[1..] {
        let v: Vec<&str> = l.split(',').collect();
        assert_eq!(v[0..2], v[2..4]);
    }
    assert_eq!(lines[2], "0.0,2.0,0.0,2.0");
}

#[test]
fn mover_grid_is_supported_in_the_region() {
    let dir = TempDir::new().unwrap();
    let scene = write(&dir, "mover.json", MOVER_SCENE);
    let out = out_path(&dir, "r.json");
    assert_eq!(code(&run(&["construct", "--scene", &scene, "--out", &out])), 0);
    let csv = out_path(&dir, "g.csv");
    assert_eq!(code(&run(&["grid", &out, "--resolution", "41", "--out", &csv])), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut moved = 0;
    for l in text.lines().skip(1) {
        let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        let r = ((v[0] - 2.0).powi(2) + (v[1] - 2.0).powi(2)).sqrt();
        let same = v[0].to_bits() == v[2].to_bits() && v[1].to_bits() == v[3].to_bits();
        if r >= 1.0 {
            assert!(same, "{l} moved outside the region");
        } else if !same {
            moved += 1;
        }
    }
    assert!(moved > 0);
}

#[test]
fn frame_grid_has_fiber_columns() {
    let dir = TempDir::new().unwrap();
    let scene = scenes().join("single-point.json");
    let out = out_path(&dir, "r.json");
    let o = run(&["construct", "--scene", scene.to_str().unwrap(), "--out", &out, "--samples", "10"]);
    assert_eq!(code(&o), 0);
    let csv = out_path(&dir, "g.csv");
    assert_eq!(code(&run(&["grid", &out, "--resolution", "4", "--out", &csv])), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x1,x2,y1,y2,A11,A12,A21,A22");
    assert_eq!(text.lines().count(), 17);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 8));
}

#[test]
fn outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let scene = scenes().join("chain.json");
    let s = scene.to_str().unwrap();
    let (a, b) = (out_path(&dir, "a.json"), out_path(&dir, "b.json"));
    assert_eq!(code(&run(&["construct", "--scene", s, "--out", &a, "--samples", "10"])), 0);
    assert_eq!(code(&run(&["construct", "--scene", s, "--out", &b, "--samples", "10"])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (ga, gb) = (out_path(&dir, "a.csv"), out_path(&dir, "b.csv"));
    assert_eq!(code(&run(&["grid", &a, "--resolution", "5", "--out", &ga])), 0);
    assert_eq!(code(&run(&["grid", &a, "--resolution", "5", "--out", &gb])), 0);
    assert_eq!(std::fs::read(&ga).unwrap(), std::fs::read(&gb).unwrap());
}
