use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fsl_cli::report::{CheckResult, Report, SuiteReport};
use fsl_cli::{emit_plot_data, BaselineStore, CliError, RunConfig, BASELINE_ENV};
use serde_json::Value;
use tempfile::tempdir;

fn fsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsl"))
        .args(args)
        .env_remove(BASELINE_ENV)
        .output()
        .expect("fsl runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_report(p: &Path) -> Report {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn without_timestamp(p: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    v["generated_at"] = Value::Null;
    v
}

#[test]
fn unknown_suite_exits_with_config_error() {
    let out = fsl(&["verify", "--suite", "no-such-suite"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-suite"));
}

#[test]
fn calderon_on_default_line_passes() {
    let dir = tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = fsl(&["verify", "--suite", "calderon", "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = read_report(&report);
    let recon: Vec<&CheckResult> = r.checks().filter(|c| c.check == "reconstruction").collect();
    assert_eq!(recon.len(), 2);
    assert!(recon.iter().all(|c| c.ratios.max <= 1e-6));
}

#[test]
fn repeated_runs_match_up_to_timestamp() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = fsl(&["verify", "--suite", "calderon,lp-identity", "--samples", "12", "--report", s(p)]);
        assert!(out.status.code().is_some());
    }
    assert_eq!(without_timestamp(&a), without_timestamp(&b));
}

#[test]
fn rebaseline_on_fresh_store_then_gates() {
    let dir = tempdir().unwrap();
    let bl = dir.path().join("bl");
    let missing = fsl(&["verify", "--suite", "space", "--baseline-dir", s(&bl)]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stdout).contains("no baseline recorded"));

    let out = fsl(&["verify", "--suite", "space", "--baseline-dir", s(&bl), "--rebaseline"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let store = BaselineStore::open(&bl, "line64").unwrap();
    assert!(!store.is_empty());

    let again = fsl(&["verify", "--suite", "space", "--baseline-dir", s(&bl)]);
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn baseline_drift_reports_both_values() {
    let dir = tempdir().unwrap();
    let bl = dir.path().join("bl");
    fsl(&["verify", "--suite", "space", "--baseline-dir", s(&bl), "--rebaseline"]);
    let file = bl.join("line64.json");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    let key = "space/doubling/c_doubling|";
    let recs = v["entries"][key].as_array_mut().unwrap();
    let last = recs.last_mut().unwrap();
    last["band"] = serde_json::json!([1000.0, 1000.0]);
    fs::write(&file, serde_json::to_string_pretty(&v).unwrap()).unwrap();

    let report = dir.path().join("r.json");
    let out = fsl(&["verify", "--suite", "space", "--baseline-dir", s(&bl), "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(1));
    let r = read_report(&report);
    let c = r.checks().find(|c| c.key() == key).unwrap();
    assert!(!c.pass);
    let note = c.notes.join(" ");
    assert!(note.contains("baseline mismatch"), "{note}");
    assert!(note.contains("1e3"), "{note}");
    assert!(note.contains(&format!("{:e}", c.ratios.max)), "{note}");
}

#[test]
fn baseline_store_is_append_only() {
    let dir = tempdir().unwrap();
    let bl = dir.path().join("bl");
    fsl(&["verify", "--suite", "space", "--baseline-dir", s(&bl), "--rebaseline"]);
    let key = "space/doubling/c_doubling|";
    let before = BaselineStore::open(&bl, "line64").unwrap().history(key).len();
    fsl(&["verify", "--suite", "space", "--baseline-dir", s(&bl), "--rebaseline", "--seed", "8"]);
    let store = BaselineStore::open(&bl, "line64").unwrap();
    assert_eq!(store.history(key).len(), before + 1);
    let first = &store.history(key)[0];
    let reopened = BaselineStore::open(&bl, "line64").unwrap();
    assert_eq!(&reopened.history(key)[0], first);
}

fn sample_report() -> Report {
    let mut r = Report::empty("line64");
    let checks = [1.5, 2.0, 3.0]
        .iter()
        .map(|p| {
            CheckResult::new(
                "norms",
                "lp-identity",
                "lp",
                format!("p={p}"),
                &[0.1 + p / 7.0, 1.0 / 3.0, std::f64::consts::PI * p],
            )
        })
        .collect();
    r.suites.push(SuiteReport {
        suite: "norms".into(),
        pass: true,
        checks,
    });
    r
}

#[test]
fn plot_csv_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let r = sample_report();
    emit_plot_data(&r, dir.path()).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("norms-lp-identity.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for (row, c) in rows.iter().zip(r.checks()) {
        let min: f64 = row[4].parse().unwrap();
        let max: f64 = row[5].parse().unwrap();
        let median: f64 = row[6].parse().unwrap();
        assert_eq!(min, c.ratios.min);
        assert_eq!(max, c.ratios.max);
        assert_eq!(median, c.ratios.median);
    }
}

#[test]
fn empty_report_gives_header_only_csv() {
    let dir = tempdir().unwrap();
    let files = emit_plot_data(&Report::empty("x"), dir.path()).unwrap();
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(&files[0]).unwrap();
    assert_eq!(text, "suite,check,label,params,min,max,median\n");
}

#[test]
fn report_subcommand_writes_plots() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("r.json");
    fs::write(&input, serde_json::to_string(&sample_report()).unwrap()).unwrap();
    let plots = dir.path().join("plots");
    let out = fsl(&["report", "--input", s(&input), "--plots", s(&plots)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(plots.join("checks.csv").is_file());
}

#[test]
fn config_paths_resolve_relative_to_config() {
    let dir = tempdir().unwrap();
    fs::write(
        dir.path().join("space.json"),
        r#"{"type":"grid","dim":1,"side":16,"spacing":0.0625}"#,
    )
    .unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"name":"tiny","space":"space.json","suites":["calderon"]}"#).unwrap();
    let (c, base) = RunConfig::load(&cfg).unwrap();
    let resolved = c.resolve(&base).unwrap();
    assert_eq!(resolved.name, "tiny");
    assert_eq!(resolved.build().unwrap().op.len(), 16);

    let out = fsl(&["verify", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn missing_referenced_file_is_config_error() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"name":"x","space":"absent.json"}"#).unwrap();
    let (c, base) = RunConfig::load(&cfg).unwrap();
    let err = c.resolve(&base).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert_eq!(err.exit_code(), 2);
    assert_eq!(fsl(&["verify", "--config", s(&cfg)]).status.code(), Some(2));
}

fn write_field(path: &Path, n: usize) {
    let mut text = String::from("value\n");
    for i in 0..n {
        let x = i as f64 / n as f64;
        text.push_str(&format!("{}\n", (std::f64::consts::TAU * x).sin() + 0.3 * (3.0 * std::f64::consts::TAU * x).cos()));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn decompose_writes_atoms() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("f.csv");
    write_field(&input, 64);
    let out_path = dir.path().join("atoms.json");
    let out = fsl(&["decompose", "--M", "2", "--p", "2", "--input", s(&input), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let atoms = v["atoms"].as_array().unwrap();
    assert!(!atoms.is_empty());
    assert!(atoms[0].get("s_Q").is_some());
    assert!(atoms[0].get("b").is_none());
}

#[test]
fn apply_writes_field_and_rejects_missing_symbol() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("f.csv");
    write_field(&input, 64);
    let out_path = dir.path().join("g.csv");
    let out = fsl(&["apply", "--op", "fractional", "--s", "1", "--input", s(&input), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(&out_path).unwrap();
    assert_eq!(rows.lines().count(), 65);

    let bad = fsl(&["apply", "--op", "multiplier", "--input", s(&input)]);
    assert_eq!(bad.status.code(), Some(2));
}
