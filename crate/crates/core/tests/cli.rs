use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semiclassical"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const HARMONIC: &str = "beta = 1.0\neps_list = [0.25, 0.125, 0.0625]\n[model]\nd = 1\nradial = [1.0]\n";

#[test]
fn dry_run_accepts_default_config() {
    let out = bin().args(["partition", "--dry-run"]).output().unwrap();
    assert!(out.status.success());
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "beta = \n[model]\n");
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["entropy-convergence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    assert!(!out_dir.exists());
}

#[test]
fn entropy_convergence_table_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HARMONIC);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("run{run}"));
        let st = bin()
            .args(["entropy-convergence", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .status()
            .unwrap();
        assert!(st.success());
        let csv = std::fs::read_to_string(out_dir.join("entropy-convergence.csv")).unwrap();
        let json = std::fs::read_to_string(out_dir.join("entropy-convergence.json")).unwrap();
        outputs.push((csv, json));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = &outputs[0].0;
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "eps,n_max,Z_scaled,S_vN_renorm,S_W_renorm,S_B_target,err_vN,err_W,F_vN_renorm,F_W_renorm,F_B_target"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let target = 1.0 + std::f64::consts::PI.ln();
    assert!((rows[0][5] - target).abs() < 1e-8);
    assert!(rows[2][6] < rows[0][6] && rows[2][7] < rows[0][7]);
    let manifest: serde_json::Value = serde_json::from_str(&outputs[0].1).unwrap();
    let kappa = manifest["calibrated"]["kappa"].as_f64().unwrap();
    assert!((kappa - std::f64::consts::SQRT_2).abs() < 1e-6);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn partition_and_free_energy_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HARMONIC);
    for cmd in ["partition", "free-energy"] {
        let st = bin()
            .arg(cmd)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(st.success(), "{cmd}");
        assert!(dir.path().join(format!("{cmd}.csv")).exists());
    }
}

#[test]
fn lattice_divergence_writes_dump() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["lattice-divergence", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    assert!(dir.path().join("lattice_M3.csv").exists());
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let out = bin()
        .args(["partition", "--dry-run"])
        .env("SEMICLASSICAL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_invariants_passes() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["check-invariants", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
}
