use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ramlt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramlt")).args(args).output().unwrap()
}

fn scene(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes")
        .join(name)
        .display()
        .to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn render(out: &Path, extra: &[&str]) -> Output {
    let (scene, out) = (scene("cornell.scn"), out.display().to_string());
    let mut args = vec![
        "render",
        "--scene",
        &scene,
        "-o",
        &out,
        "--width",
        "16",
        "--height",
        "16",
        "--mutations",
        "2e4",
        "--b-samples",
        "5000",
        "--log-interval",
        "1e4",
    ];
    args.extend_from_slice(extra);
    ramlt(&args)
}

#[test]
fn render_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("img.pfm");
    let p = |n: &str| dir.path().join(n).display().to_string();
    let o = render(
        &out,
        &[
            "--png",
            &p("img.png"),
            "--trace",
            &p("trace.csv"),
            "--partition-dump",
            &p("leaves.txt"),
            "--chain-trace",
            &p("chain.csv"),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "img.pfm",
        "img.png",
        "trace.csv",
        "leaves.txt",
        "chain.csv",
        "img.pfm.metrics.csv",
        "img.pfm.manifest",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let metrics = std::fs::read_to_string(dir.path().join("img.pfm.metrics.csv")).unwrap();
    assert!(metrics.starts_with("time_s,mutations,rrmse,mean_acceptance\n"));
    assert_eq!(metrics.lines().count(), 3);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("mutation_index,region_id,n_k,lambda,alpha_hat\n"));
    assert!(trace.lines().count() > 10);
    let chain = std::fs::read_to_string(dir.path().join("chain.csv")).unwrap();
    assert_eq!(chain.lines().count(), 20_001);
}

#[test]
fn manifest_echoes_every_setting() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("img.pfm");
    let o = render(&out, &["--strategy", "ra-grid", "--seed", "9", "--lambda-min", "-12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = std::fs::read_to_string(dir.path().join("img.pfm.manifest")).unwrap();
    for key in [
        "version",
        "scene",
        "output",
        "strategy",
        "perturbation",
        "mutations",
        "chains",
        "batch",
        "gamma_max",
        "gamma_scale",
        "alpha_star",
        "lambda_init",
        "lambda_min",
        "sigma_ratio",
        "n_top",
        "n_bottom",
        "m_split",
        "m_refine",
        "b_samples",
        "seed",
        "width",
        "height",
        "max_vertices",
        "perturb_prob",
        "log_interval",
    ] {
        assert!(
            m.lines().any(|l| l.starts_with(&format!("{key}="))),
            "{key} missing from\n{m}"
        );
    }
    assert!(m.contains("strategy=ra-grid\n"));
    assert!(m.contains("seed=9\n"));
    assert!(m.contains("lambda_min=-12\n"));
    assert!(m.contains("mutations=20000\n"));
}

#[test]
fn fixed_strategy_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.pfm"), dir.path().join("b.pfm"));
    assert!(render(&a, &["--strategy", "fixed", "--seed", "4"]).status.success());
    assert!(render(&b, &["--strategy", "fixed", "--seed", "4"]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = ramlt(&["compare", &a.display().to_string(), &b.display().to_string()]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout), "0.0000\n");
}

#[test]
fn compare_writes_error_maps_and_rejects_size_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.pfm"), dir.path().join("b.pfm"));
    assert!(render(&a, &["--seed", "1"]).status.success());
    assert!(render(&b, &["--seed", "2"]).status.success());
    let (map, png) = (dir.path().join("e.pfm"), dir.path().join("e.png"));
    let o = ramlt(&[
        "compare",
        &a.display().to_string(),
        &b.display().to_string(),
        "--rgb",
        "--error-map",
        &map.display().to_string(),
        "--error-png",
        &png.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!(e > 0.0);
    assert!(map.exists() && png.exists());

    let c = dir.path().join("c.pfm").display().to_string();
    let o = ramlt(&[
        "render",
        "--scene",
        &scene("quad.scn"),
        "-o",
        &c,
        "--width",
        "8",
        "--height",
        "16",
        "--mutations",
        "1e3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ramlt(&["compare", &a.display().to_string(), &c]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("dimensions differ"), "{}", stderr(&o));
}

#[test]
fn missing_scene_is_reported_by_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.pfm").display().to_string();
    let o = ramlt(&["render", "--scene", "/no/such/room.scn", "-o", &out]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/no/such/room.scn"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.pfm");
    assert!(!render(&out, &["--no-such-flag"]).status.success());
    assert!(!render(&out, &["--strategy", "best"]).status.success());
    assert!(!render(&out, &["--mutations", "lots"]).status.success());
    assert!(!render(&out, &["--alpha-star", "1.5"]).status.success());
}

fn write_series(path: &Path, rho: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("x,y\n");
    let mut x = 0.0;
    for _ in 0..200_000 {
        let (a, y): (f64, f64) = (rng.gen(), rng.gen());
        x = rho * x + a - 0.5;
        let _ = writeln!(s, "{x},{y}");
    }
    std::fs::write(path, s).unwrap();
}

fn tau_of(stdout: &str, column: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with(&format!("{column} "))).unwrap();
    line.split_whitespace()
        .find_map(|t| t.strip_prefix("tau="))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn diagnose_reports_autocorrelation_times() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.csv");
    // x is AR(1) with ρ = 0.5, so τ = 3; y is white noise
    write_series(&f, 0.5, 6);
    let o = ramlt(&["diagnose", &f.display().to_string()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    let (tx, ty) = (tau_of(&out, "x"), tau_of(&out, "y"));
    assert!((tx - 3.0).abs() < 0.3, "{out}");
    assert!((ty - 1.0).abs() < 0.1, "{out}");

    let o = ramlt(&["diagnose", &f.display().to_string(), "--column", "y"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1);
}

#[test]
fn diagnose_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.csv");
    std::fs::write(&f, "").unwrap();
    assert!(!ramlt(&["diagnose", &f.display().to_string()]).status.success());
    std::fs::write(&f, "x\n1\n2\n").unwrap();
    assert!(!ramlt(&["diagnose", &f.display().to_string()]).status.success());
}
