use std::path::{Path, PathBuf};
use std::process::Command;

use lorentz_cli::{run, verify, Analysis, AnalysisConfig, CliError, Outcome, Report};
use lorentz_core::rational::ratio;
use lorentz_core::{AtomId, Status};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn load(name: &str) -> AnalysisConfig {
    AnalysisConfig::from_json(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lorentz-dyn"))
}

#[test]
fn example_report_carries_the_one_ninth_witness() {
    let report = run(&load("comb.json")).unwrap();
    let Outcome::Verdict { verdict } = &report.results[0].outcome else { panic!("expected a verdict") };
    assert_eq!(verdict.status, Status::Refuted);
    assert_eq!(verdict.witness.as_ref().unwrap().scalar_value("sup_ratio"), Some(&ratio(1, 9)));

    let Outcome::Verdict { verdict } = &report.results[1].outcome else { panic!("expected a verdict") };
    assert_eq!(verdict.status, Status::Refuted);
    let c = verdict.witness.as_ref().unwrap().collision.clone().unwrap();
    assert_eq!(c.image, AtomId::Pair(1, 0));

    let Outcome::Corollary { report: cor, .. } = &report.results[2].outcome else { panic!("expected a corollary") };
    assert_eq!((cor.a.status, cor.b.status), (Status::Confirmed, Status::Confirmed));
    assert!(verify(&report).unwrap().is_empty());
}

#[test]
fn echoed_config_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = load("bilateral_shift.json");
    config.outputs.orbit_dir = Some(dir.path().to_path_buf());
    let first = run(&config).unwrap().to_json();

    let parsed = Report::from_json(&first).unwrap();
    let echo = serde_json::to_string(&parsed.config).unwrap();
    let second = run(&AnalysisConfig::from_json(&echo).unwrap()).unwrap().to_json();
    assert_eq!(first, second);
    assert_eq!(Report::from_json(&second).unwrap(), parsed);
}

#[test]
fn bilateral_shift_probe_and_expansivity() {
    let report = run(&load("bilateral_shift.json")).unwrap();
    let passages: Vec<_> = report
        .results
        .iter()
        .filter_map(|r| match &r.outcome {
            Outcome::Probe { report, .. } => Some(report.first_passage.clone()),
            _ => None,
        })
        .collect();
    // p = 2 then p = 3: 2^{n/p} ≥ 2 first at n = p.
    assert_eq!(passages, vec![vec![Some(2); 4], vec![Some(3); 4]]);
    let Outcome::Verdict { verdict } = &report.results[0].outcome else { panic!() };
    assert_eq!(verdict.status, Status::Confirmed);
    assert!(verify(&report).unwrap().is_empty());
}

#[test]
fn p_equal_to_one_is_rejected() {
    let text = std::fs::read_to_string(fixture("invalid_p.json")).unwrap();
    assert!(matches!(AnalysisConfig::from_json(&text), Err(CliError::Schema(_))));
}

#[test]
fn precondition_failures_do_not_stop_the_run() {
    let mut config = load("multiplication.json");
    config.analyses = vec![Analysis::PositivelyExpansive, Analysis::MultiplicationLiYorke];
    let report = run(&config).unwrap();
    assert!(matches!(report.results[0].outcome, Outcome::Error { .. }));
    let Outcome::Multiplication { verdict, .. } = &report.results[1].outcome else { panic!() };
    assert_eq!(verdict.status, Status::Refuted);
    assert_eq!(report.failures().count(), 1);
}

#[test]
fn tampered_witness_fails_verification() {
    let report = run(&load("comb.json")).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    let seq = &mut value["results"][0]["outcome"]["verdict"]["witness"]["sequences"][0]["values"][2];
    assert!(seq.is_string());
    *seq = serde_json::Value::String("1/80".into());
    let tampered = Report::from_json(&value.to_string()).unwrap();
    let mismatches = verify(&tampered).unwrap();
    assert_eq!(mismatches.len(), 1, "{mismatches:?}");
}

#[test]
fn orbit_files_are_referenced_and_replayed() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = load("bilateral_shift.json");
    config.analyses.clear();
    config.horizon = 3;
    config.outputs.orbit_dir = Some(dir.path().to_path_buf());
    let report = run(&config).unwrap();
    assert_eq!(report.orbit_traces.len(), 2);
    let text = std::fs::read_to_string(&report.orbit_traces[0].path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,1,1,") && lines[4].starts_with("3,8,1,"), "{text}");
    assert!(verify(&report).unwrap().is_empty());

    std::fs::write(&report.orbit_traces[0].path, text.replace("3,8,1,", "3,9,1,")).unwrap();
    assert_eq!(verify(&report).unwrap().len(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let status = |args: &[&std::ffi::OsStr]| bin().args(args).output().unwrap().status.code();

    let analyze = |cfg: &Path| status(&["analyze".as_ref(), cfg.as_os_str(), "--out".as_ref(), out.as_os_str()]);
    assert_eq!(analyze(&fixture("comb.json")), Some(0));
    assert_eq!(status(&["verify".as_ref(), out.as_os_str()]), Some(0));
    assert_eq!(analyze(&fixture("invalid_p.json")), Some(2));

    let mut config = load("multiplication.json");
    config.analyses.push(Analysis::CheckInjective);
    let cfg = dir.path().join("mixed.json");
    std::fs::write(&cfg, serde_json::to_string(&config).unwrap()).unwrap();
    assert_eq!(analyze(&cfg), Some(3));

    analyze(&fixture("comb.json"));
    let mut value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    value["results"][1]["outcome"]["verdict"]["witness"]["collision"]["image"] = serde_json::json!([3, 0]);
    std::fs::write(&out, value.to_string()).unwrap();
    assert_eq!(status(&["verify".as_ref(), out.as_os_str()]), Some(4));
}

#[test]
fn orbit_and_norm_commands() {
    let out = bin().args(["orbit".as_ref(), fixture("bilateral_shift.json").as_os_str()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("n,")).count(), 2);

    let out = bin().args(["norm".as_ref(), fixture("permutation.json").as_os_str()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    // ‖χ_{0}‖ with μ = 1/2 at (p, q) = (2, 1): p′·μ^{1/p} = 2·√(1/2).
    let v = lines[0]["norm"]["value"].as_f64().unwrap();
    assert!((v - 2f64.sqrt()).abs() < 1e-12, "{v}");
}
