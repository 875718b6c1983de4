use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conformal-poisson"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn kazdan_warner_example_reports_the_pairing_as_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kazdan-warner", "--K", "zn_plus_2", "--v", "constant"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    let max = r["results"]["max_abs_pairing"].as_f64().unwrap();
    assert!((max - 8.0 * std::f64::consts::PI / 3.0).abs() < 1e-6 * max, "{max}");
    assert_eq!(r["results"]["flag"], Value::Bool(true));
    let csv = std::fs::read_to_string(dir.path().join("pairings.csv")).unwrap();
    assert!(csv.starts_with("field,pairing\n"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn verify_inequality_passes_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify-inequality", "--n", "3", "--resolution", "8", "--samples", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    let r = report(dir.path());
    assert!(r["results"]["equality_gap"].as_f64().unwrap() <= 1e-12);
    let mut rdr = csv::Reader::from_path(dir.path().join("panel.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 9);
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    // seventeen significant digits
    let ratio = &rows[0][1];
    assert!(ratio.split('e').next().unwrap().trim_start_matches('-').len() >= 16, "{ratio}");
}

#[test]
fn failed_check_exits_two_and_names_it() {
    // the constant-field value moves about 6.8% per 0.1 step in p
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["continuation", "--resolution", "8", "--schedule", "3.9,3.8,3.7"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("check failed: max relative jump"), "{err}");
    assert_eq!(report(dir.path())["passed"], Value::Bool(false));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["bogus"],
        &["solve", "--p", "1.7"],
        &["verify-inequality", "--resolution", "7"],
        &["carleman", "--n", "3"],
        &["trial-energy", "--lambda", "0.0001"],
        &["continuation", "--schedule", "3.7,3.8"],
        &["solve", "--K", "nonsense"],
        &["solve", "--threads", "0"],
        &["solve", "--config", "/nonexistent/config.json"],
    ];
    for args in cases {
        let o = run(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"resolution": 8, "typo": 1}"#).unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("typo"));
}

#[test]
fn report_is_bitwise_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        &["verify-inequality", "--resolution", "8", "--samples", "6"][..],
        &["solve", "--resolution", "8", "--samples", "2", "--mode", "matrix_free"][..],
    ] {
        let mut reports = Vec::new();
        for threads in ["1", "2", "3"] {
            let mut args = cmd.to_vec();
            args.extend(["--threads", threads]);
            let o = run(&args, dir.path());
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            reports.push(std::fs::read(dir.path().join("report.json")).unwrap());
        }
        assert_eq!(reports[0], reports[1], "{cmd:?}");
        assert_eq!(reports[0], reports[2], "{cmd:?}");
    }
}

#[test]
fn report_echoes_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"resolution": 8, "k": {"kind": "constant", "value": 1.0}, "solver": {"p": 3.8}, "seed": 4, "samples": 1}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--seed", "7"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let c = &r["config"];
    assert_eq!(c["resolution"], 8);
    assert_eq!(c["seed"], 7);
    assert_eq!(c["solver"]["p"], 3.8);
    assert_eq!(c["n"], 3);
    assert_eq!(c["radial_order"], 8);
    assert_eq!(c["normalization"], "balanced");
    assert_eq!(c["operator_mode"], "cached");
    assert_eq!(r["results"]["best_seed"], 7);
    // the echoed config reproduces the run
    let echo = dir.path().join("echo.json");
    std::fs::write(&echo, serde_json::to_string(c).unwrap()).unwrap();
    let out2 = dir.path().join("out2");
    let o = run(&["solve", "--config", echo.to_str().unwrap()], &out2);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out2)["results"], r["results"]);
    for name in ["runs.csv", "trace.csv", "solution.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn trial_energy_example_reports_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["trial-energy", "--n", "3", "--lambda", "0.05,0.075,0.1,0.15"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    let exponent = r["results"]["fitted_exponent"].as_f64().unwrap();
    assert!(exponent.is_finite() && exponent > 0.0);
    assert!(r["results"]["fitted_coefficient"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("trial_energy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}
