use std::path::Path;
use std::process::{Command, Output};

fn bispec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bispec")).args(args).output().expect("binary runs")
}

const SMALL: &[&str] = &["--image-side", "32", "--frames", "6", "--radius", "10", "--inner-radius", "4", "--photons", "1e5", "--max-iter", "10"];

fn with_small<'a>(head: &[&'a str], out: &'a str) -> Vec<&'a str> {
    head.iter().chain(SMALL).copied().chain(["--out", out]).collect()
}

#[test]
fn selftest_passes() {
    let out = bispec(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("adjoint: PASS"));
    assert!(text.contains("noiseless GN: PASS"));
}

#[test]
fn invalid_combination_exits_with_config_code() {
    let out = bispec(&["recover", "--formulation", "e1phi", "--method", "pgn"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pgn"));
    let out = bispec(&["recover", "--radius", "40"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bispec(&["sweep", "--parameter", "wind"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = bispec(&["recover", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn recover_writes_run_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let out = bispec(&with_small(&["recover", "--formulation", "e1obj", "--method", "gn", "--reg", "penalty"], root));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Path::new(root).join("e1obj_gn_penalty/run0");
    for f in ["report.csv", "solution.pgm", "solution.bimg"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let summary = std::fs::read_to_string(Path::new(root).join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# desk test\nformulation = e2phi\nmethod = lbfgs\nrepeats = 2\n").unwrap();
    let root = dir.path().join("out");
    let root = root.to_str().unwrap();
    let out = bispec(&with_small(&["recover", "--config", cfg.to_str().unwrap(), "--method", "gd"], root));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Path::new(root).join("e2phi_gd_none/run1/report.csv").is_file());
}

#[test]
fn simulate_writes_images_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let out = bispec(&with_small(&["simulate"], root));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let index = bispec_core::bispectrum::read_index(std::fs::File::open(dir.path().join("index.bidx")).unwrap()).unwrap();
    assert_eq!(index.image_side(), 32);
    let truth = bispec_core::io::read_bimg(std::fs::File::open(dir.path().join("truth.bimg")).unwrap()).unwrap();
    assert_eq!(truth.data.len(), 32 * 32);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let out = bispec(&with_small(&["sweep", "--parameter", "noise", "--values", "1,9"], root));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = bispec_core::experiment::read_sweep(std::fs::File::open(dir.path().join("sweep_noise.csv")).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), [1.0, 9.0]);
}
