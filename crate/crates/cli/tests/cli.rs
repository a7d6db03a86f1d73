use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbm")).args(args).output().expect("binary runs")
}

fn column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn zero_quality_factor_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbm(&["modes", "--out", dir.path().to_str().unwrap(), "--set", "membrane.quality_factor=0"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error kind=config field=quality_factor"), "{stderr}");
    assert!(!dir.path().join("modes.txt").exists());
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbm(&["modes", "--out", dir.path().to_str().unwrap(), "--set", "membrane.q=3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error kind=parse"));
}

#[test]
fn manifest_rerun_is_byte_identical_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = sbm(&[
        "dynamics",
        "--out",
        a.path().to_str().unwrap(),
        "--workers",
        "1",
        "--seed",
        "11",
        "--set",
        "membrane.n_modes=40",
        "--set",
        "membrane.g0=0.02",
        "--set",
        "dynamics.n_traj=40",
        "--set",
        "dynamics.t_max=200",
    ]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let manifest = a.path().join("manifest.toml");
    let second = sbm(&[
        "dynamics",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
        "--workers",
        "4",
    ]);
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    for name in ["polarization.txt", "manifest.toml"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn clamped_dephasing_shows_revivals() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbm(&["dephase", "--out", dir.path().to_str().unwrap(), "--set", "membrane.n_modes=300"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = column(&dir.path().join("dephase.txt"), 0);
    let g = column(&dir.path().join("dephase.txt"), 2);
    let t_end = 3.0 * 2.0 * std::f64::consts::PI;
    assert!((t.last().unwrap() - t_end).abs() < 1e-9);
    let maxima = (1..g.len() - 1).filter(|&i| g[i] > g[i - 1] && g[i] >= g[i + 1]).count();
    assert!(maxima >= 2, "found {maxima} local maxima");
}

#[test]
fn exponent_scan_spans_clamped_to_strained() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbm(&[
        "exponent-scan",
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "membrane.n_modes=400",
        "--set",
        "exponent_scan.tau_values=[0.0, 1e9]",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = column(&dir.path().join("exponent_scan.txt"), 1);
    assert!((s[0] + 1.0).abs() < 0.05, "tau = 0 gives s = {}", s[0]);
    assert!(s[1].abs() < 0.05, "large tau gives s = {}", s[1]);
}

#[test]
fn sweep_writes_summary_footer() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbm(&[
        "sweep",
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "membrane.n_modes=40",
        "--set",
        "dynamics.n_traj=4",
        "--set",
        "dynamics.t_max=800",
        "--set",
        "sweep.g0_values=[0.001, 0.002]",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("sweep.txt")).unwrap();
    assert!(text.starts_with("# g0 M stderr_M\n"));
    assert!(text.contains("# g_c = "));
    assert!(text.contains("# exponent = "));
    assert_eq!(column(&dir.path().join("sweep.txt"), 0), vec![0.001, 0.002]);
}
