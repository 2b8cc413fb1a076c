//! End-to-end runs of the `casimir-lab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use casimir_core::io::read_table;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir-lab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_curve(path: &Path, scale: f64) {
    let mut text = String::from("a_nm,force_pN\n");
    for i in 0..20 {
        let a = 60.0 + 10.0 * i as f64;
        text.push_str(&format!("{a},{}\n", scale * -1e6 / (a * a * a)));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn synth_writes_the_full_set_and_echoes_the_truth() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["synth", "--seed", "11", "--threads", "1", "--out", s(tmp.path())]);
    let csvs = fs::read_dir(tmp.path())
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name().into_string().unwrap();
            name.starts_with("sweep_") && name.ends_with(".csv")
        })
        .count();
    assert_eq!(csvs, 100);
    let truth: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["seed"], 11);
    assert_eq!(truth["z0_nm"], 29.5);
    assert!(tmp.path().join("manifest.json").exists());
    assert!(tmp.path().join("run_manifest.json").exists());
}

#[test]
fn compare_gives_zero_for_identical_and_constant_for_scaled_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"), tmp.path().join("c.csv"));
    write_curve(&a, 1.0);
    write_curve(&b, 1.0);
    write_curve(&c, 1.1);
    let same = tmp.path().join("same");
    ok(&["compare", s(&a), s(&b), "--out", s(&same)]);
    let diff = read_table(&same.join("comparison.csv")).unwrap();
    assert!(diff.column("rel_diff_pct").unwrap().iter().all(|&d| d == 0.0));
    let scaled = tmp.path().join("scaled");
    ok(&["compare", s(&a), s(&c), "--out", s(&scaled)]);
    let diff = read_table(&scaled.join("comparison.csv")).unwrap();
    let d = diff.column("rel_diff_pct").unwrap();
    assert!(d.iter().all(|&x| (x.abs() - 10.0).abs() < 1e-9), "{d:?}");
}

#[test]
fn band_adds_envelope_columns_in_both_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let (sphere, plate) = (data("au_drude.json"), data("ito_on_quartz.json"));
    let args = [
        "compute", "--sphere", s(&sphere), "--plate", s(&plate),
        "--a-min", "100", "--a-max", "110", "--a-step", "5", "--band", "--threads", "1",
    ];
    let csv = tmp.path().join("csv");
    ok(&[&args[..], &["--out", s(&csv)]].concat());
    let t = read_table(&csv.join("force.csv")).unwrap();
    let (f, lo, hi) = (t.column("force_pN").unwrap(), t.column("force_lo_pN").unwrap(), t.column("force_hi_pN").unwrap());
    for i in 0..3 {
        assert!(lo[i].min(hi[i]) <= f[i] && f[i] <= lo[i].max(hi[i]));
        assert!(lo[i] != hi[i]);
    }
    let json = tmp.path().join("json");
    ok(&[&args[..], &["--out", s(&json), "--format", "json"]].concat());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json.join("force.json")).unwrap()).unwrap();
    assert_eq!(v["force_lo_pN"].as_array().unwrap().len(), 3);
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.json");
    let out = run(&["kk", "--material", s(&missing), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"no_such_key": 1}"#).unwrap();
    let out = run(&["compute", "--config", s(&bad), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["compute", "--a-min", "-5", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_reports_missing_sweeps_and_reuses_a_calibration() {
    let tmp = tempfile::tempdir().unwrap();
    let set = tmp.path().join("set");
    ok(&["synth", "--seed", "5", "--threads", "1", "--out", s(&set)]);
    fs::remove_file(set.join("sweep_v03_r07.csv")).unwrap();
    let first = tmp.path().join("first");
    ok(&["analyze", "--manifest", s(&set.join("manifest.json")), "--threads", "1", "--out", s(&first)]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first.join("calibration.json")).unwrap()).unwrap();
    assert_eq!(report["sweeps_loaded"], 99);
    assert!(report["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("sweep_v03_r07")));

    let second = tmp.path().join("second");
    let cal = first.join("calibration.json");
    ok(&["analyze", "--manifest", s(&set.join("manifest.json")), "--calibration", s(&cal), "--out", s(&second)]);
    let f1 = read_table(&first.join("casimir.csv")).unwrap();
    let f2 = read_table(&second.join("casimir.csv")).unwrap();
    assert_eq!(f1.column("force_pN").unwrap(), f2.column("force_pN").unwrap());
}

#[test]
fn kk_writes_the_imaginary_axis_permittivity() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["kk", "--material", s(&data("ito_drude.json")), "--points", "5", "--out", s(tmp.path())]);
    let t = read_table(&tmp.path().join("eps.csv")).unwrap();
    for (&xi, &eps) in t.column("xi_ev").unwrap().iter().zip(t.column("eps").unwrap()) {
        let want = 1.0 + 1.5 * 1.5 / (xi * (xi + 0.128));
        assert!((eps / want - 1.0).abs() < 1e-12);
    }
}
