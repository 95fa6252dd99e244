use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sim(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tridomain-sim"));
    if let Some(text) = config {
        let p = dir.join("run.toml");
        fs::write(&p, text).unwrap();
        cmd.arg("--config").arg(p);
    }
    cmd.arg("--output").arg(dir.join("out")).args(args).output().unwrap()
}

const SHORT: &str = "[geometry]\nmesh_density = 4\n[solver]\ndt = 0.01\nt_end = 0.03\n";

fn csv_rows(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join("out/timeseries.csv")).unwrap().lines().map(String::from).collect()
}

#[test]
fn zero_data_run_writes_zero_series() {
    let tmp = TempDir::new().unwrap();
    let out = sim(tmp.path(), Some(SHORT), &["run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(tmp.path());
    assert_eq!(rows.len(), 5, "header plus 4 rows for 3 steps at stride 1");
    for r in &rows[1..] {
        let vals: Vec<f64> = r.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!(vals.iter().all(|&x| x == 0.0), "{r}");
    }
    assert!(tmp.path().join("out/final_state.bin").exists());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "run");
}

#[test]
fn identical_configs_give_identical_output() {
    let cfg = format!("{SHORT}[initial.v1]\nkind = \"bump\"\namplitude = 0.7\ncenter = [0.4, 0.5]\nradius = 0.2\n");
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(sim(a.path(), Some(&cfg), &["run"]).status.success());
    assert!(sim(b.path(), Some(&cfg), &["run", "--jobs", "3"]).status.success());
    assert_eq!(fs::read(a.path().join("out/timeseries.csv")).unwrap(), fs::read(b.path().join("out/timeseries.csv")).unwrap());
    assert_eq!(fs::read(a.path().join("out/final_state.bin")).unwrap(), fs::read(b.path().join("out/final_state.bin")).unwrap());
    let rows = csv_rows(a.path());
    assert!(rows[1].split(',').nth(1).unwrap().parse::<f64>().unwrap() > 0.0);
}

fn manifest_hash(dir: &Path) -> String {
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap();
    m["config_sha256"].as_str().unwrap().to_string()
}

#[test]
fn manifest_hash_tracks_config_bytes() {
    let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    sim(a.path(), Some(SHORT), &["nondim"]);
    sim(b.path(), Some(SHORT), &["nondim"]);
    sim(c.path(), Some(&format!("{SHORT}# changed\n")), &["nondim"]);
    assert_eq!(manifest_hash(a.path()), manifest_hash(b.path()));
    assert_ne!(manifest_hash(a.path()), manifest_hash(c.path()));
    assert_eq!(manifest_hash(a.path()).len(), 64);
}

#[test]
fn vtk_output_has_legacy_header() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!("{SHORT}[output]\nformats = [\"vtk\"]\nstride = 2\n");
    assert!(sim(tmp.path(), Some(&cfg), &["run"]).status.success());
    let mesh = fs::read_to_string(tmp.path().join("out/mesh.vtk")).unwrap();
    assert!(mesh.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(mesh.contains("DATASET UNSTRUCTURED_GRID") && mesh.contains("SCALARS subdomain int 1"));
    let snap = fs::read_to_string(tmp.path().join("out/fields/state_00001.vtk")).unwrap();
    assert!(snap.contains("SCALARS u double 1"));
    assert!(!tmp.path().join("out/timeseries.csv").exists());
}

#[test]
fn spd_reports_strict_and_semidefinite() {
    let tmp = TempDir::new().unwrap();
    let out = sim(tmp.path(), Some(SHORT), &["spd", "--delta", "1e-3"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("strict PD: pass"), "{text}");
    let out = sim(tmp.path(), Some(SHORT), &["spd", "--delta", "0"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("semidefinite: pass, strict: fail"), "{text}");
    assert_eq!(out.status.code(), Some(0), "{text}");
    let mtx = fs::read_to_string(tmp.path().join("out/galerkin_matrix.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket"));
}

#[test]
fn certify_and_nondim_verdicts() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(sim(tmp.path(), None, &["certify"]).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/verdict.json")).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    let bad = sim(tmp.path(), Some("[ionic]\nbeta1 = 0.0\n"), &["certify"]);
    assert_eq!(bad.status.code(), Some(1));
    // the quoted ε mismatch is reported, not treated as a failure
    assert_eq!(sim(tmp.path(), None, &["nondim"]).status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("out/nondim.txt")).unwrap();
    assert!(text.contains("1.414"), "{text}");
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let out = sim(tmp.path(), Some("[solver]\ndtt = 0.1\n"), &["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dtt"));
    assert_eq!(sim(tmp.path(), None, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(sim(tmp.path(), Some("[ionic]\ntheta = 1.5\n"), &["run"]).status.code(), Some(2));
    assert_eq!(sim(tmp.path(), None, &["run", "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(sim(tmp.path(), None, &["--help"]).status.code(), Some(0));
}
