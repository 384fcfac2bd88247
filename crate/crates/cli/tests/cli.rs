use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_imbergman"))
}

fn run_plan(dir: &Path, plan: &str, extra: &[&str]) -> Output {
    let p = dir.join("plan.json");
    std::fs::write(&p, plan).unwrap();
    bin()
        .args(["run", "--plan"])
        .arg(&p)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

fn emit(dir: &Path, kind: &str) -> Output {
    bin()
        .args(["emit", "--report"])
        .arg(dir.join("out/summary.json"))
        .args(["--kind", kind])
        .output()
        .unwrap()
}

#[test]
fn empty_suite_list_gives_empty_report() {
    let d = tempfile::tempdir().unwrap();
    let out = run_plan(d.path(), r#"{"domain": "disc", "suites": []}"#, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(d.path());
    assert_eq!(s["results"].as_array().unwrap().len(), 0);
    assert_eq!(s["passed"], Value::Bool(true));
    assert_eq!(s["plan_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_suite_is_rejected_before_running() {
    let d = tempfile::tempdir().unwrap();
    let out = run_plan(d.path(), r#"{"domain": "disc", "suites": ["metric", "astrology"]}"#, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config error") && err.contains("astrology"), "{err}");
    assert!(!d.path().join("out").exists());
}

#[test]
fn missing_domain_file_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let out = run_plan(d.path(), r#"{"domain": "nowhere.json", "suites": ["kernel"]}"#, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.json"));
}

#[test]
fn metric_on_disc_reports_the_arctanh_oracle() {
    let d = tempfile::tempdir().unwrap();
    let plan = r#"{"domain": "disc", "suites": ["metric"], "budgets": {"mu_samples": 5000}}"#;
    let out = run_plan(d.path(), plan, &["--seed", "7", "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(d.path());
    assert_eq!(s["seed"], 7);
    let checks = s["results"][0]["checks"].as_array().unwrap();
    let oracle = checks.iter().find(|c| c["name"] == "metric.arctanh_oracle.n1").expect("oracle check");
    assert_eq!(oracle["passed"], Value::Bool(true));
    for row in oracle["witness"].as_array().unwrap() {
        let x = row["x"].as_f64().unwrap();
        let exact = 0.5 * ((1.0 + x) / (1.0 - x)).ln();
        assert!((row["d_upper"].as_f64().unwrap() - exact).abs() <= 0.01 * exact);
        assert!(row.get("seconds").is_none(), "timings stay out of the summary");
    }
}

#[test]
fn emitted_series_have_the_documented_columns() {
    let d = tempfile::tempdir().unwrap();
    let plan = r#"{"domain": "disc", "suites": ["gauge", "operators", "covering"],
                  "budgets": {"fr_samples": 20000, "commutator_trials": 10, "split_count": 5}}"#;
    let out = run_plan(d.path(), plan, &[]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let header = |kind: &str| {
        let o = emit(d.path(), kind);
        assert!(o.status.success(), "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.lines().count() > 1, "{kind} has rows");
        text.lines().next().unwrap().to_string()
    };
    assert!(header("fr-regression").starts_with("log_abs_r,log_estimate,stderr"));
    assert!(header("berezin-decay").starts_with("neg_r,berezin_abs,N"));
    assert!(header("cover-map").starts_with("j,u_index,center_angle,d"));
    for f in ["fr_rows.csv", "cover_disc.json", "operators/T_bump_N10.bin", "operators/T_bump_N10.json"] {
        assert!(d.path().join("out").join(f).exists(), "{f}");
    }
    let side: Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("out/operators/T_bump_N10.json")).unwrap()).unwrap();
    assert_eq!(side["N"], 10);
    let dim = side["dim"].as_u64().unwrap();
    let bytes = std::fs::metadata(d.path().join("out/operators/T_bump_N10.bin")).unwrap().len();
    assert_eq!(bytes, 16 * dim * dim);
}

#[test]
fn emit_without_the_series_fails() {
    let d = tempfile::tempdir().unwrap();
    run_plan(d.path(), r#"{"domain": "disc", "suites": []}"#, &[]);
    let o = emit(d.path(), "cover-map");
    assert_eq!(o.status.code(), Some(2));
    let o = emit(d.path(), "histogram");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_agree_except_for_the_timestamp() {
    let plan = r#"{"domain": ["disc"], "suites": ["kernel", "lattice"]}"#;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_plan(a.path(), plan, &[]);
    run_plan(b.path(), plan, &[]);
    let (mut x, mut y) = (summary(a.path()), summary(b.path()));
    x["timestamp"] = Value::Null;
    y["timestamp"] = Value::Null;
    assert_eq!(x, y);
}
