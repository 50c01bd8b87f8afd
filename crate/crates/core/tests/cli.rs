use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxthresh"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(config: &Path, cmd: &str, out: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

fn curve_value(rows: &[Vec<String>], x: f64) -> f64 {
    let row = rows.iter().find(|r| (r[0].parse::<f64>().unwrap() - x).abs() < 1e-9).unwrap();
    row[1].parse().unwrap()
}

#[test]
fn prox_curves_hit_known_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&data("capped_r4_3.toml"), "prox-curve", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("prox_curve.csv"));
    assert_eq!(rows.len(), 1301);
    assert_eq!(curve_value(&rows, 1.0), 0.0);
    assert_eq!(curve_value(&rows, 5.5), 1.2);

    let out = run(&data("symmetric_r2.toml"), "prox-curve", dir.path(), &[]);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("prox_curve.csv"));
    assert!((curve_value(&rows, 3.8) - 1.0).abs() < 1e-12);
}

#[test]
fn vanishing_penalty_gives_identity() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("id.toml");
    fs::write(
        &config,
        "[regularizer]\ndimension = 1\n\n[regularizer.default]\nc_lower = -inf\nc_upper = inf\nd_lower = 0.0\n\
         d_upper = 0.0\neta = 1e-12\nr = 2.0\n\n[prox_curve]\ngamma = 1.0\nx_min = -3.0\nx_max = 3.0\nstep = 0.5\n",
    )
    .unwrap();
    let out = run(&config, "prox-curve", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for row in read_csv(&dir.path().join("prox_curve.csv")) {
        let (x, p): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        assert!((x - p).abs() <= 1e-11 * (1.0 + x.abs()));
    }
}

#[test]
fn fit_demo_improves_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = run(&data("fit_demo.toml"), "fit", a.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let nums: Vec<f64> = text
        .split(['=', ','])
        .filter_map(|s| s.trim().parse().ok())
        .collect();
    assert!(nums[1] < nums[0], "{text}");
    assert!(run(&data("fit_demo.toml"), "fit", b.path(), &[]).status.success());
    for file in ["coefficients.csv", "trace.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
    let coef = read_csv(&a.path().join("coefficients.csv"));
    assert_eq!(coef.len(), 2);
    assert_eq!(coef[0][0], "1");
}

#[test]
fn missing_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("fit.toml");
    let text = fs::read_to_string(data("fit_demo.toml")).unwrap().replace("demo.csv", "no_such_file.csv");
    fs::write(&config, text).unwrap();
    let out = run(&config, "fit", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = run(&dir.path().join("absent.toml"), "fit", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fast_rate_with_small_exponent_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("fit.toml");
    let text = fs::read_to_string(data("fit_demo.toml"))
        .unwrap()
        .replace("[solver]\n", "[solver]\np = 2.0\nfast_rate = true\n")
        .replace("demo.csv", data("demo.csv").to_str().unwrap());
    fs::write(&config, text).unwrap();
    let out = run(&config, "fit", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p > 2"));
}

#[test]
fn smoke_experiment_is_fast_and_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = run(&data("consistency_smoke.toml"), "experiment-consistency", a.path(), &["--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(start.elapsed().as_secs() < 60);
    let out = run(&data("consistency_smoke.toml"), "experiment-consistency", b.path(), &["--seed", "3", "--threads", "1"]);
    assert!(out.status.success());
    for file in ["consistency_trials.csv", "consistency_summary.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
    assert_eq!(read_csv(&a.path().join("consistency_trials.csv")).len(), 6);
}

#[test]
fn validate_reports_sections() {
    let out = bin().arg("validate").arg("--config").arg(data("fit_demo.toml")).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ok: regularizer"));
    assert!(text.contains("ok: data: n = 60, K = 2"));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(
        &config,
        "[regularizer]\ndimension = 1\n\n[regularizer.default]\nc_lower = 1.0\nc_upper = 2.0\nd_lower = 0.0\n\
         d_upper = 0.0\neta = 1.0\nr = 2.0\n",
    )
    .unwrap();
    let out = bin().arg("validate").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("typo.toml");
    fs::write(&config, "[solver]\nlamda = 0.1\n").unwrap();
    let out = bin().arg("validate").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
