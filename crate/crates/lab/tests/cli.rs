use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use loewner_lab::formats::{driving_csv, pack_paths, parse_driving, unpack_paths};
use loewner_lab_core::loewner::{DrivingFunction, DrivingKind};
use proptest::prelude::*;
use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loewner-lab"))
        .args(args)
        .env("LOEWNER_LAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_zero_driver(dir: &Path) -> String {
    let path = dir.join("zero.csv");
    fs::write(&path, "# kind=chordal\nt,value\n0,0\n0.25,0\n0.5,0\n0.75,0\n1,0\n").unwrap();
    path.display().to_string()
}

#[test]
fn constants_at_kappa_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = lab(&["--kappa", "2", "--out-dir", out.to_str().unwrap(), "constants"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_file(&out.join("constants.json"));
    let chordal = v["tables"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["case"]["name"] == "chordal")
        .unwrap();
    assert_eq!(chordal["c"], -2.0);
    assert_eq!(chordal["b"], 1.0);
    assert_eq!(chordal["b_tilde"], 0.0);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn trace_of_zero_driver_is_vertical_segment() {
    let dir = tempfile::tempdir().unwrap();
    let driving = write_zero_driver(dir.path());
    let out = dir.path().join("run");
    let o = lab(&["--out-dir", out.to_str().unwrap(), "trace", "--driving", &driving]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out.join("curve.json"));
    let tip = v["points"].as_array().unwrap().last().unwrap().clone();
    assert!(tip[0].as_f64().unwrap().abs() < 1e-9);
    assert!((tip[1].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn identity_deformation_passes_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("id.json");
    fs::write(&map, r#"{"kind": "identity"}"#).unwrap();
    let out = dir.path().join("run");
    let o = lab(&[
        "--mc-samples",
        "2000",
        "--out-dir",
        out.to_str().unwrap(),
        "verify-deform",
        "--case",
        "chordal",
        "--f",
        map.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out.join("verify.json"));
    assert_eq!(v["discrepancy"], 0.0);
    assert_eq!(v["pass"], true);
}

#[test]
fn malformed_inputs_exit_with_structured_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,value\n0,0\n").unwrap();
    let missing = dir.path().join("missing.csv");
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    for (args, kind) in [
        (vec!["--out-dir", out, "trace", "--driving", bad.to_str().unwrap()], "malformed_input"),
        (vec!["--out-dir", out, "trace", "--driving", missing.to_str().unwrap()], "io"),
        (vec!["--out-dir", out, "no-such-command"], "usage"),
    ] {
        let o = lab(&args);
        assert_eq!(o.status.code(), Some(2));
        let err: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["error"]["kind"], kind);
        assert!(!err["error"]["message"].as_str().unwrap().is_empty());
    }
}

#[test]
fn repeated_runs_write_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let args = [
        "--seed",
        "11",
        "--mc-samples",
        "20",
        "--steps",
        "50",
        "--out-dir",
        out.to_str().unwrap(),
        "sample",
        "--kind",
        "chordal",
    ];
    assert_eq!(lab(&args).status.code(), Some(0));
    let first = fs::read(out.join("paths.bin")).unwrap();
    let first_meta = fs::read(out.join("sample.json")).unwrap();
    assert_eq!(lab(&args).status.code(), Some(0));
    assert_eq!(first, fs::read(out.join("paths.bin")).unwrap());
    assert_eq!(first_meta, fs::read(out.join("sample.json")).unwrap());
}

proptest! {
    #[test]
    fn driving_csv_roundtrips_bitwise(values in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let n = values.len() - 1;
        let d = DrivingFunction::new(DrivingKind::Radial, DrivingFunction::uniform_grid(1.5, n), values).unwrap();
        let back = parse_driving(&driving_csv(&d, &Value::Null), "mem").unwrap();
        prop_assert_eq!(back.kind, d.kind);
        prop_assert_eq!(back.grid, d.grid);
        prop_assert_eq!(back.values, d.values);
    }

    #[test]
    fn packed_paths_roundtrip(values in prop::collection::vec(-10f64..10.0, 6)) {
        let grid = vec![0.0, 0.5, 1.0];
        let paths: Vec<DrivingFunction> = values
            .chunks(3)
            .map(|v| DrivingFunction::new(DrivingKind::Chordal, grid.clone(), v.to_vec()).unwrap())
            .collect();
        let (g, back) = unpack_paths(&pack_paths(&grid, &paths), 3, 2).unwrap();
        prop_assert_eq!(g, grid);
        prop_assert_eq!(back, vec![values[..3].to_vec(), values[3..].to_vec()]);
    }
}
