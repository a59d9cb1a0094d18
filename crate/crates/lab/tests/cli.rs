use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wsobolev_lab::config;
use wsobolev_lab::report::{self, RunReport, Verdict};
use wsobolev_lab::runner::{self, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wsobolev"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn verify(config: &Path, extra: &[&str], workers: Option<&str>) -> Output {
    let mut c = bin();
    c.arg("verify").arg("--config").arg(config).args(extra);
    match workers {
        Some(w) => c.env(wsobolev_lab::WORKERS_ENV, w),
        None => c.env_remove(wsobolev_lab::WORKERS_ENV),
    };
    c.output().expect("binary runs")
}

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn green_config_exits_zero_with_small_residual() {
    let out = verify(&configs().join("green.json"), &[], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    let id = r.find("identity").unwrap();
    assert!(id.residual.unwrap().0 < 1e-8);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("example32.json")).unwrap();
    let text = text.replace(r#"{"check": "identity", "expect": "diverge"}"#, r#""identity""#);
    let out = verify(&write_config(&dir, "fail.json", &text), &[], None);
    assert_eq!(out.status.code(), Some(1));
    let r: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!r.find("identity").unwrap().passed);
}

#[test]
fn expected_divergence_exits_zero() {
    let out = verify(&configs().join("example32.json"), &[], None);
    assert_eq!(out.status.code(), Some(0));
    let r: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    let id = r.find("identity").unwrap();
    assert_eq!(id.expect.as_deref(), Some("diverge"));
    assert_eq!(id.converged, Some(false));
    assert_eq!(id.note.as_deref(), Some("expected divergence matched"));
}

#[test]
fn invalid_config_exits_two_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("green.json")).unwrap().replace(r#""power""#, r#""powr""#);
    let out = verify(&write_config(&dir, "bad.json", &text), &[], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`weight.family`") && err.contains("powr"), "{err}");

    let out = verify(&write_config(&dir, "typo.json", r#"{"checks": [], "quadrature": {"levles": [1]}}"#), &[], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`quadrature.levles`"));

    let out = verify(&dir.path().join("missing.json"), &[], None);
    assert_eq!(out.status.code(), Some(2));

    let out = verify(&configs().join("green.json"), &[], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_runs_and_worker_counts() {
    for name in ["green.json", "opial.json", "douglas.json"] {
        let path = configs().join(name);
        for format in ["json", "csv"] {
            let a = verify(&path, &["--format", format], Some("1"));
            let b = verify(&path, &["--format", format], Some("4"));
            let c = verify(&path, &["--format", format], None);
            assert!(!a.stdout.is_empty());
            assert_eq!(a.stdout, b.stdout, "{name} {format}");
            assert_eq!(a.stdout, c.stdout, "{name} {format}");
        }
    }
}

#[test]
fn json_round_trip_is_exact() {
    for name in ["green.json", "kappa-large.json", "example31.json", "theta.json"] {
        let exp = config::load(&configs().join(name)).unwrap();
        let r = runner::run(&exp, RunOptions::default());
        let text = report::to_json(&r);
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r, "{name}");
        assert_eq!(report::to_json(&back), text);
    }
}

#[test]
fn csv_has_one_row_per_level_and_term() {
    let exp = config::load(&configs().join("opial.json")).unwrap();
    let r = runner::run(&exp, RunOptions::default());
    let csv = report::to_csv(&r);
    let expected: usize = r.checks.iter().map(|c| c.row_count()).sum();
    assert_eq!(csv.lines().count(), expected + 1);
    let levels = exp.quad.levels.len();
    assert_eq!(r.find("identity-restricted").unwrap().levels.len(), levels);

    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(&dir, "empty.json", r#"{"checks": []}"#);
    let out = dir.path().join("empty.csv");
    let o = verify(&empty, &["--format", "csv", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out).unwrap(), "check,name,level,term,value\n");
}

#[test]
fn timings_are_opt_in() {
    let out = verify(&configs().join("theta.json"), &["--timings"], None);
    let r: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.checks.iter().all(|c| c.wall_time_s.is_some()));
    let out = verify(&configs().join("theta.json"), &[], None);
    assert!(!String::from_utf8_lossy(&out.stdout).contains("wall_time"));
}

fn converge(config: &Path, min: usize, max: usize) -> Output {
    bin()
        .args(["converge", "--config"])
        .arg(config)
        .args(["--min-level", &min.to_string(), "--max-level", &max.to_string()])
        .output()
        .unwrap()
}

/// `(value, increment, order)` rows of one term.
fn study_rows(out: Output, term: &str) -> Vec<(f64, Option<f64>, Option<f64>)> {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("subject,term,level,value,increment,order"));
    let opt = |s: &str| (!s.is_empty()).then(|| s.parse::<f64>().unwrap());
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[1] == term)
        .map(|f| (f[3].parse().unwrap(), opt(f[4]), opt(f[5])))
        .collect()
}

fn with_grading(dir: &tempfile::TempDir, grading: &str) -> PathBuf {
    let text = std::fs::read_to_string(configs().join("example31.json")).unwrap();
    write_config(dir, &format!("g{grading}.json"), &text.replace(r#""auto""#, grading))
}

#[test]
fn singular_study_orders_follow_the_grading() {
    let exact = 8.0 * std::f64::consts::PI / 3.0;
    let auto = study_rows(converge(&configs().join("example31.json"), 1, 4), "I2");
    assert_eq!(auto.len(), 4);
    assert!(auto[0].1.is_none() && auto[1].2.is_none());
    assert!(auto.iter().all(|r| (r.0 - exact).abs() < 1e-8 * exact), "{auto:?}");

    let dir = tempfile::tempdir().unwrap();
    let plain = study_rows(converge(&with_grading(&dir, "1"), 1, 6), "I2");
    let graded = study_rows(converge(&with_grading(&dir, "3"), 1, 6), "I2");
    for r in &plain[2..] {
        assert!((r.2.unwrap() - 0.5).abs() < 0.05, "{plain:?}");
    }
    for r in &graded[2..] {
        assert!((r.2.unwrap() - 1.5).abs() < 0.05, "{graded:?}");
    }
}

#[test]
fn smooth_study_increments_vanish() {
    let jdiv = study_rows(converge(&configs().join("green.json"), 1, 3), "Jdiv");
    assert_eq!(jdiv[1].1, Some(0.0));
    assert_eq!(jdiv[2].2, None);
    let i2 = study_rows(converge(&configs().join("green.json"), 1, 4), "I2");
    assert!(i2.iter().all(|r| (r.0 - 2.0 * std::f64::consts::PI).abs() < 1e-12));
    assert_eq!(converge(&configs().join("green.json"), 3, 3).status.code(), Some(2));
    let d = study_rows(converge(&configs().join("douglas.json"), 4, 7), "douglas_energy");
    assert!(d.iter().all(|r| (r.0 - std::f64::consts::PI).abs() < 1e-12));
}

#[test]
fn list_verbs_name_every_check_and_family() {
    let out = bin().arg("list-checks").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 16);
    for name in ["identity", "metafune", "douglas", "theta-representation", "pointwise"] {
        assert!(text.lines().any(|l| l == name));
    }
    let out = bin().arg("list-families").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("power-log") && text.contains("scalar-profile") && text.contains("radial-power"));
}
