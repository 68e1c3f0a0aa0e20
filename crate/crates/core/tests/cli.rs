use std::fs;
use std::path::Path;
use std::process::Command;

use fracorder::cli::{
    cmd_check, cmd_fit, cmd_simulate, settings, CheckOptions, Experiment, ExperimentConfig, FIGURE_POINTS,
};
use fracorder::models::ModelKind;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracorder"))
}

fn config(exp: Experiment, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(exp);
    cfg.out = out.to_path_buf();
    cfg
}

#[test]
fn table1a_has_seven_rows_per_kind() {
    let dir = tempfile::tempdir().unwrap();
    let run = cmd_fit(&config(Experiment::Table1a, dir.path())).unwrap();
    assert_eq!(run.rows.len(), 14);
    for kind in [ModelKind::Polynomial, ModelKind::Rational] {
        assert_eq!(run.rows.iter().filter(|r| r.kind == kind).count(), 7);
    }
    assert_eq!(run.failures(), 0);
    let text = fs::read_to_string(&run.csv).unwrap();
    let header = text.lines().next().unwrap();
    for col in ["T0", "kind", "alpha1", "alpha2", "amplitude", "r1", "objective", "converged", "status"] {
        assert!(header.split(',').any(|c| c == col), "missing column {col}");
    }
    assert_eq!(text.lines().count(), 15);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&run.json).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 14);
}

#[test]
fn table3_has_two_subtables_of_five_rows() {
    let cfg = config(Experiment::Table3, Path::new("unused"));
    let s = settings(&cfg);
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].subtable, "a");
    assert_eq!(s[1].subtable, "b");
    assert!(s.iter().all(|x| x.t0.len() == 5));
}

#[test]
fn t0_override_replaces_the_preset_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Table2, dir.path());
    cfg.t0 = Some(vec![1e-6]);
    cfg.kinds = vec![ModelKind::Polynomial];
    let run = cmd_fit(&cfg).unwrap();
    assert_eq!(run.rows.len(), 2);
    assert!(run.rows.iter().all(|r| r.t0 == 1e-6));
}

#[test]
fn empty_t0_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fit", "--experiment", "table1a", "--t0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"experiment": "table1a", "T0": []}"#).unwrap();
    let out = bin().args(["fit", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_experiment_and_fields_are_usage_errors() {
    let out = bin().args(["fit", "--experiment", "table9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"experiment": "table1a", "colour": 1}"#).unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["fit", "--experiment", "fig1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_fits_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let out = bin()
            .args(["fit", "--experiment", "table1a", "--jobs", jobs, "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["table1a_fit.csv", "table1a_fit.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn table_traces_sit_on_the_open_uniform_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Table1a, dir.path());
    cfg.t0 = Some(vec![1e-6]);
    let run = cmd_simulate(&cfg).unwrap();
    assert!(run.errors.is_empty());
    let csv = run.files.iter().find(|f| f.extension().unwrap() == "csv").unwrap();
    let mut rdr = csv::Reader::from_path(csv).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "g"]);
    let rows: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 100);
    assert!((rows[0].0 - 1e-8).abs() < 1e-22);
    let sidecar = csv.with_extension("json");
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar).unwrap()).unwrap();
    assert!(meta["truncation"].is_object());
    assert_eq!(meta["n"], 100);
}

#[test]
fn fig1_writes_trace_and_both_models() {
    let dir = tempfile::tempdir().unwrap();
    let run = cmd_simulate(&config(Experiment::Fig1, dir.path())).unwrap();
    assert!(run.errors.is_empty());
    let csv = dir.path().join("fig1_alpha0.25.csv");
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "g", "f_p", "f_r"]);
    let rows: Vec<(f64, f64, f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), FIGURE_POINTS);
    assert_eq!(rows.last().unwrap().0, 1.0);
    // the rational model bounds the relaxation from above, the polynomial from below
    assert!(rows.iter().all(|r| r.3 >= r.1 - 1e-15 && r.1 >= r.2));
}

#[test]
fn fig2_uses_the_stated_lower_weight() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Fig2, dir.path());
    cfg.t_max = 0.01;
    let run = cmd_simulate(&cfg).unwrap();
    assert!(run.errors.is_empty());
    let json = run.files.iter().find(|f| f.extension().unwrap() == "json").unwrap();
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(meta["weights"], serde_json::json!([0.5, 1.0]));
}

#[test]
fn check_passes_and_reports_the_step2_value() {
    let report = cmd_check(&CheckOptions::default());
    assert!(report.all_passed(), "{}", report.render());
    let step2 = report.get("laplace_step2_limit").unwrap();
    assert!(step2.detail.contains("2.49"), "{}", step2.detail);
}

#[test]
fn biased_gamma_fails_the_mittag_leffler_identities() {
    let report = cmd_check(&CheckOptions { gamma_error: 1e-6 });
    assert!(!report.all_passed());
    for name in ["ml_exponential_identity", "ml_erfc_identity"] {
        assert!(!report.get(name).unwrap().passed, "{name} should fail");
    }
    let out = bin().args(["check", "--gamma-bias", "1e-6"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
