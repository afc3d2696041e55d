use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kwmix(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kwmix"))
        .current_dir(cwd)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn kwmix")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn tree(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p.clone());
            }
            out.push(p.strip_prefix(root).unwrap().to_path_buf());
        }
    }
    out.sort();
    out
}

const BLOBS: &str = r#"{"name": "blobs", "data": {"source": "blobs", "blobs": {"n": 240, "dim": 4}},
 "seeds": [0, 1], "model": {"hidden": [8]}, "training": {"epochs": 2}}"#;

fn blobs_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blobs.json"), BLOBS).unwrap();
    dir
}

#[test]
fn exit_codes() {
    let dir = blobs_dir();
    let d = dir.path();
    assert_eq!(kwmix(d, &["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(kwmix(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        kwmix(
            d,
            &["train", "--config", "blobs.json", "--set", "mixup.alpah=1"]
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        kwmix(d, &["train", "--config", "missing.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kwmix(d, &["train", "--config", "blobs.json", "--set", "seeds=[]"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kwmix(d, &["warp-demo", "--tau-list", "-1", "--out", "w"])
            .status
            .code(),
        Some(2)
    );
    // a dataset path that does not exist is a runtime failure
    let o = kwmix(
        d,
        &["train", "--set", "data.path=nowhere.csv", "--out", "x"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.csv"));
    assert_eq!(kwmix(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn writes_only_under_out() {
    let dir = blobs_dir();
    let d = dir.path();
    let o = kwmix(
        d,
        &[
            "train",
            "--config",
            "blobs.json",
            "--out",
            "o/run",
            "--jobs",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let top: Vec<_> = fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(top.len(), 2, "{top:?}");
    let files = tree(&d.join("o/run"));
    for f in [
        "config.json",
        "report.json",
        "timing.json",
        "seed-0/checkpoint.json",
        "seed-1/trace.csv",
    ] {
        assert!(
            files.contains(&PathBuf::from(f)),
            "{f} missing from {files:?}"
        );
    }
    let trace = fs::read_to_string(d.join("o/run/seed-0/trace.csv")).unwrap();
    assert!(trace.starts_with("epoch,train_loss,valid_loss\n"));
    assert_eq!(trace.lines().count(), 3);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = blobs_dir();
    let d = dir.path();
    let a = kwmix(
        d,
        &[
            "train",
            "--config",
            "blobs.json",
            "--set",
            "mixup.mode=vanilla",
            "--seed",
            "7",
            "--out",
            "a",
        ],
    );
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = kwmix(
        d,
        &[
            "train",
            "--config",
            "a/config.json",
            "--out",
            "b",
            "--jobs",
            "3",
        ],
    );
    assert!(b.status.success());
    let ra = fs::read(d.join("a/report.json")).unwrap();
    assert_eq!(ra, fs::read(d.join("b/report.json")).unwrap());
    assert_eq!(
        fs::read(d.join("a/seed-7/checkpoint.json")).unwrap(),
        fs::read(d.join("b/seed-7/checkpoint.json")).unwrap()
    );
    assert_eq!(
        json(&d.join("a/config.json"))["seeds"],
        serde_json::json!([7])
    );
}

#[test]
fn eval_then_metrics_round_trip() {
    let dir = blobs_dir();
    let d = dir.path();
    assert!(kwmix(d, &["train", "--config", "blobs.json", "--out", "t"])
        .status
        .success());
    let e = kwmix(
        d,
        &[
            "eval",
            "--config",
            "t/config.json",
            "--checkpoint",
            "t/seed-1/checkpoint.json",
            "--out",
            "e",
        ],
    );
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let m = kwmix(
        d,
        &[
            "metrics",
            "--predictions",
            "e/predictions.json",
            "--out",
            "m",
        ],
    );
    assert!(m.status.success());
    let eval_report = fs::read(d.join("e/metrics.json")).unwrap();
    assert_eq!(eval_report, fs::read(d.join("m/metrics.json")).unwrap());
    assert_eq!(
        eval_report,
        fs::read(d.join("t/seed-1/metrics.json")).unwrap()
    );
    let printed: serde_json::Value = serde_json::from_slice(&m.stdout).unwrap();
    assert_eq!(printed, json(&d.join("e/metrics.json")));
    assert_eq!(
        kwmix(d, &["metrics", "--predictions", "none.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn grid_outputs() {
    let dir = blobs_dir();
    let d = dir.path();
    let o = kwmix(
        d,
        &[
            "grid",
            "--config",
            "blobs.json",
            "--tau-max-list",
            "0.1,1",
            "--tau-std-list",
            "1,2",
            "--out",
            "g",
            "--jobs",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.join("g/grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau_max,tau_std,seed,metric,value"));
    // 4 cells × 2 seeds × 5 metrics
    assert_eq!(lines.count(), 40);
    let g = json(&d.join("g/grid.json"));
    assert_eq!(g["cells"].as_array().unwrap().len(), 4);
    assert_eq!(
        kwmix(
            d,
            &["grid", "--config", "blobs.json", "--tau-std-list", "1"]
        )
        .status
        .code(),
        Some(2)
    );
}

fn histogram(csv: &str, series: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .filter(|l| l.split(',').next() == Some(series))
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn identity_warp_demo_follows_raw_beta() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = kwmix(
        d,
        &[
            "warp-demo",
            "--alpha",
            "0.5",
            "--tau-list",
            "1",
            "--samples",
            "100000",
            "--bins",
            "50",
            "--out",
            "w",
        ],
    );
    assert!(o.status.success());
    let csv = fs::read_to_string(d.join("w/density.csv")).unwrap();
    let raw = histogram(&csv, "raw");
    let warped = histogram(&csv, "tau=1");
    assert_eq!(raw, warped);
    // Beta(½, ½) is the arcsine law, F(x) = (2/π) asin √x
    let f = |x: f64| 2.0 / std::f64::consts::PI * x.sqrt().asin();
    let n: f64 = warped.iter().sum();
    let chi2: f64 = warped
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let e = n * (f((i + 1) as f64 / 50.0) - f(i as f64 / 50.0));
            (c - e) * (c - e) / e
        })
        .sum();
    // upper 1% point of chi-square with 49 degrees of freedom
    assert!(chi2 < 74.919, "chi2 = {chi2}");
}

#[test]
fn warp_demo_half_tau_is_near_beta_2_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = kwmix(
        d,
        &[
            "warp-demo",
            "--alpha",
            "1",
            "--tau-list",
            "0.5",
            "--samples",
            "100000",
            "--compare-shape",
            "2.1",
            "--out",
            "w",
        ],
    );
    assert!(o.status.success());
    let s = json(&d.join("w/summary.json"));
    let series = s["series"].as_array().unwrap();
    let half = series.iter().find(|x| x["series"] == "tau=0.5").unwrap();
    let ks = half["ks_compare"].as_f64().unwrap();
    assert!(ks < 0.03, "KS = {ks}");
}

#[test]
fn warp_demo_kernel_mode() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = kwmix(
        d,
        &[
            "warp-demo",
            "--tau-max",
            "1",
            "--tau-std",
            "1",
            "--distance-list",
            "0.25,1,4",
            "--samples",
            "1000",
            "--out",
            "k",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&d.join("k/summary.json"));
    let taus: Vec<f64> = s["series"].as_array().unwrap()[1..]
        .iter()
        .map(|x| x["tau"].as_f64().unwrap())
        .collect();
    assert!(taus[0] < 1.0 && taus[1] == 1.0 && taus[2] > 1.0, "{taus:?}");
    assert_eq!(
        kwmix(d, &["warp-demo", "--tau-max", "1", "--out", "k"])
            .status
            .code(),
        Some(2)
    );
}
