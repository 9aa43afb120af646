use std::fs;
use std::process::{Command, Output};

fn smoothmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothmod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn first_value(out: &Output) -> f64 {
    let s = String::from_utf8_lossy(&out.stdout);
    s.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn compute_examples() {
    let ck = smoothmod(&["compute", "ck", "--k", "1", "--h", "0.5"]);
    assert_eq!(ck.status.code(), Some(0));
    assert!((first_value(&ck) - 0.25 / 24.0).abs() < 1e-15);

    let cross = smoothmod(&["compute", "crossover"]);
    assert!((first_value(&cross) - 0.778).abs() < 1e-3);

    let w2 = smoothmod(&["compute", "w2", "--fn", "builtin:cos1", "--h", "0.5", "--k", "1"]);
    assert_eq!(w2.status.code(), Some(0));
    let line = String::from_utf8_lossy(&w2.stdout).to_string();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields.len(), 4, "{line}");
    let (lo, hi): (f64, f64) = (fields[1].parse().unwrap(), fields[2].parse().unwrap());
    let exact = 1.0 - 2.0 / std::f64::consts::PI;
    assert!(lo <= exact + 1e-12 && exact - 1e-12 <= hi, "{line}");
}

#[test]
fn compute_from_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    fs::write(&path, r#"{"type": "trig", "constant": 0.0, "cos": [0.0, 1.0]}"#).unwrap();
    let out = smoothmod(&["compute", "eminus1", "--fn", path.to_str().unwrap(), "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    // E_1(cos 4πt) = 1
    assert!((first_value(&out) - 1.0).abs() < 1e-6);
}

#[test]
fn compute_errors() {
    assert_eq!(smoothmod(&["compute", "w2", "--h", "0.5", "--k", "1"]).status.code(), Some(2));
    assert_eq!(smoothmod(&["compute", "nonsense"]).status.code(), Some(2));
    assert_eq!(
        smoothmod(&["compute", "w2", "--fn", "builtin:cos1", "--h", "-1", "--k", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn verify_sharpness_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = smoothmod(&["verify", "sharpness", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sharpness.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
    for r in json.as_array().unwrap() {
        assert_eq!(r["status"], "pass");
    }
    let csv = fs::read_to_string(dir.path().join("sharpness.csv")).unwrap();
    assert!(csv.starts_with("check_id,params,lhs_hi,rhs_lo,margin,status\n"), "{csv}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("SHARP"));
}

#[test]
fn verify_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = smoothmod(&["verify", "bernstein", "--seed", "7", "--format", "csv", "--out", d.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(!d.path().join("bernstein.json").exists());
    }
    let x = fs::read(a.path().join("bernstein.csv")).unwrap();
    let y = fs::read(b.path().join("bernstein.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn verify_custom_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.json");
    fs::write(
        &corpus,
        r#"[{"name": "c3", "function": {"builtin": "cos3"}, "params": {"h": [0.25], "k": [1, 2]}}]"#,
    )
    .unwrap();
    let out = smoothmod(&[
        "verify",
        "lemma1",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("lemma1.json")).unwrap()).unwrap();
    assert!(json.as_array().unwrap().iter().all(|r| r["params"]["h"] == 0.25));
}

#[test]
fn verify_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "[\n  {\"builtin\": \"cos1\"},\n  {\"type\": \"trig\", \"cos\": [true]}\n]").unwrap();
    let out = smoothmod(&["verify", "lemma1", "--corpus", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("entry [1]"), "{err}");

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "[]").unwrap();
    let out = smoothmod(&["verify", "sharpness", "--corpus", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(smoothmod(&["verify", "lemma9"]).status.code(), Some(2));
}
