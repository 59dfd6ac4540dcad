use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn canham(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canham")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const BUMP: &str = r#"{"family": "bump", "mass": 0.9, "width": 1.0}"#;
const EXP: &str = r#"{"family": "exp", "alpha": 0.5, "beta": 1.0}"#;

#[test]
fn validate_exponential_reports_small_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "exp.json", EXP);
    let out = canham(&["kernel", "validate", "--spec", s(&spec)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["k5_small_symbol"], true);
}

#[test]
fn negative_support_sample_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "bad.json",
        r#"{"family": "table", "samples": [[-0.5, 0.1], [0.0, 0.2], [0.5, 0.1], [1.0, 0.0]], "interp_order": 1}"#,
    );
    let out = canham(&["kernel", "validate", "--spec", s(&spec)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_or_malformed_spec_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(canham(&["kernel", "validate", "--spec", s(&missing)]).status.code(), Some(2));
    let junk = write(dir.path(), "junk.json", "{ not json");
    assert_eq!(canham(&["kernel", "validate", "--spec", s(&junk)]).status.code(), Some(2));
    assert_eq!(canham(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn fourier_of_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "exp.json", EXP);
    let out = canham(&["kernel", "fourier", "--spec", s(&spec), "--z", "0+2i"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["theta"][0].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert!(v["theta"][1].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn hamiltonian_curve_for_bump() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bump.json", BUMP);
    let csv = dir.path().join("H.csv");
    let start = Instant::now();
    let out = canham(&[
        "hamiltonian", "--spec", s(&spec), "--t0", "0", "--t1", "2", "--steps", "64", "--nodes", "64", "--out", s(&csv),
    ]);
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["t", "det_plus", "det_minus", "m", "gamma", "h11", "h22", "nodes", "panels"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 65);
    // 17 significant digits.
    assert_eq!(rows[10][3].split('e').next().unwrap().trim_start_matches('-').len(), 18);
}

#[test]
fn hamiltonian_is_trivial_for_nonpositive_t() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "exp.json", EXP);
    let out = canham(&["hamiltonian", "--spec", s(&spec), "--t0", "-2", "--t1", "0", "--steps", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    for row in reader.records() {
        assert_eq!(row.unwrap()[3].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn hamiltonian_stops_at_first_k5_violation() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "big.json", r#"{"family": "exp", "alpha": 3.0, "beta": 1.0}"#);
    let out = canham(&["hamiltonian", "--spec", s(&spec), "--t0", "0", "--t1", "5", "--steps", "20", "--nodes", "32"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("t = "), "{err}");
}

#[test]
fn fields_csv_has_four_columns() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bump.json", BUMP);
    let out = canham(&["fields", "--spec", s(&spec), "--t", "0.5", "--points", "11", "--nodes", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap().len(), 5);
    assert_eq!(reader.records().count(), 11);
}

#[test]
fn verify_nonpositive_range_passes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bump.json", BUMP);
    let report = dir.path().join("r.json");
    let out = canham(&["verify", "all", "--spec", s(&spec), "--tmax", "0", "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["all_passed"], true);
    assert!(v["passed"].as_u64().unwrap() > 0);
}

#[test]
fn coarse_grid_fails_determinant_identity() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bump.json", BUMP);
    let out = canham(&["verify", "determinant_identity", "--spec", s(&spec), "--nodes", "4", "--tol-profile", "default"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_rejects_unknown_identity() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bump.json", BUMP);
    assert_eq!(canham(&["verify", "nonsense", "--spec", s(&spec)]).status.code(), Some(2));
    assert_eq!(canham(&["verify", "all", "--spec", s(&spec), "--tol-profile", "loose"]).status.code(), Some(2));
}

#[test]
fn refine_needs_two_levels() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "exp.json", EXP);
    let out = canham(&["refine", "determinant_identity", "--spec", s(&spec), "--levels", "16"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn refine_bump_determinant_converges_spectrally() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bump.json", BUMP);
    let out = canham(&["refine", "determinant_identity", "--spec", s(&spec), "--levels", "8,16,32"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let errors: Vec<f64> = reader.records().map(|r| r.unwrap()[3].parse().unwrap()).collect();
    assert!(errors[0] / errors[1] > 1e2, "{errors:?}");
}

#[test]
fn modelspace_kernel_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "exp.json", EXP);
    let out = canham(&["modelspace", "j", "--spec", s(&spec), "--t", "0", "--z", "0+2i", "--w", "0+2i"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let re = v["j_hat"]["re"].as_f64().or_else(|| v["j_hat"][0].as_f64()).unwrap();
    assert!((re - 35.0 / (288.0 * std::f64::consts::PI)).abs() < 1e-10);
}

#[test]
fn decay_scan_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "exp.json", EXP);
    let out = canham(&[
        "modelspace", "decay", "--spec", s(&spec), "--z", "0+2i", "--t0", "0", "--t1", "1", "--steps", "4", "--nodes", "16",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv::Reader::from_reader(out.stdout.as_slice()).records().count(), 5);
}

#[test]
fn thread_cap_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bump.json", BUMP);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_canham"))
            .env("CANHAM_THREADS", threads)
            .args(["hamiltonian", "--spec", s(&spec), "--steps", "8", "--nodes", "16"])
            .output()
            .unwrap()
    };
    let one = run("1");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, run("3").stdout);
    assert_eq!(run("0").status.code(), Some(2));
}
