use std::path::Path;
use std::process::{Command, Output};

use jumpcompare::config::{Kind, ScenarioConfig};
use jumpcompare::gallery;
use jumpcompare::report::{RunReport, CSV_HEADER};
use jumpcompare::run::{run_check, run_simulate, Overrides};
use jumpcompare::{parse_config, CliError};
use jumpcompare_core::conditions::VerdictStatus;

const MINIMAL: &str = r#"{
  "kind": "vector",
  "m": 1,
  "d": 1,
  "horizon": [0.0, 1.0],
  "model1": {
    "drift": {"matrix": [[-0.5]], "offset": [0.5]},
    "diffusion": {"linear": [[[0.2]]], "offset": [[0.1]]},
    "jumps": [{"matrix": [[-0.5]], "offset": [0.2]}],
    "marks": [{"mark": [1.0], "weight": 1.0}]
  },
  "model2": {
    "drift": {"matrix": [[-0.5]], "offset": [0.0]},
    "diffusion": {"linear": [[[0.2]]], "offset": [[0.1]]},
    "jumps": [{"matrix": [[-0.5]], "offset": [0.2]}],
    "marks": [{"mark": [1.0], "weight": 1.0}]
  },
  "initial": {"x1": [0.5], "x2": [0.0]},
  "mc": {"paths": 200}
}"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpcompare"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn minimal_vector_scenario_parses_and_builds() {
    let cfg = ScenarioConfig::from_json_str(MINIMAL).unwrap();
    assert_eq!(cfg.kind(), Kind::Vector);
    assert_eq!(cfg.mc().paths, 200);
    assert_eq!(cfg.mc().step, 1.0 / 512.0);
    cfg.build().unwrap();
}

#[test]
fn parse_serialize_parse_is_identity() {
    let mut configs: Vec<ScenarioConfig> = gallery::all();
    configs.push(ScenarioConfig::from_json_str(MINIMAL).unwrap());
    for cfg in configs {
        let again = ScenarioConfig::from_json_str(&cfg.to_json_string()).unwrap();
        assert_eq!(again, cfg);
    }
}

#[test]
fn unknown_keys_are_rejected_with_a_line_number() {
    let text = MINIMAL.replace("\"mc\": {\"paths\": 200}", "\"mc\": {\"paths\": 200, \"pathz\": 3}");
    match ScenarioConfig::from_json_str(&text) {
        Err(CliError::Schema(msg)) => {
            assert!(msg.contains("pathz"), "{msg}");
            assert!(msg.contains("line 19"), "{msg}");
        }
        other => panic!("expected schema error, got {other:?}"),
    }
    let top = MINIMAL.replacen("\"kind\"", "\"colour\": 1, \"kind\"", 1);
    assert!(matches!(ScenarioConfig::from_json_str(&top), Err(CliError::Schema(_))));
}

#[test]
fn malformed_json_is_a_parse_error() {
    let text = MINIMAL.replace("\"m\": 1,", "\"m\": 1");
    assert!(matches!(ScenarioConfig::from_json_str(&text), Err(CliError::Parse { line: 4, .. })));
    assert!(matches!(ScenarioConfig::from_json_str("{\"kind\": \"vector\""), Err(CliError::Parse { .. })));
}

#[test]
fn bad_dimensions_and_weights_are_schema_errors() {
    let wrong_m = MINIMAL.replace("\"m\": 1,", "\"m\": 2,");
    let cfg = ScenarioConfig::from_json_str(&wrong_m).unwrap();
    assert!(matches!(cfg.build(), Err(CliError::Schema(_))));

    let negative = MINIMAL.replacen("\"weight\": 1.0", "\"weight\": -1.0", 1);
    let cfg = ScenarioConfig::from_json_str(&negative).unwrap();
    assert!(matches!(cfg.build(), Err(CliError::Schema(msg)) if msg.contains("weight")));
}

#[test]
fn unordered_initial_states_are_order_errors() {
    let text = MINIMAL.replace("\"x1\": [0.5], \"x2\": [0.0]", "\"x1\": [0.0], \"x2\": [0.5]");
    let cfg = ScenarioConfig::from_json_str(&text).unwrap();
    assert!(matches!(cfg.build(), Err(CliError::Order(_))));

    let mut m = gallery::scenario("matrix-pass").unwrap();
    if let ScenarioConfig::Matrix(s) = &mut m {
        s.initial.x2 = vec![vec![2.0, 0.0], vec![0.0, 0.0]];
    }
    assert!(matches!(m.build(), Err(CliError::Order(_))));
}

#[test]
fn asymmetric_matrix_inputs_are_rejected() {
    let mut m = gallery::scenario("matrix-pass").unwrap();
    if let ScenarioConfig::Matrix(s) = &mut m {
        s.model1.drift.c = vec![vec![1.0, 0.5], vec![0.0, 1.0]];
    }
    assert!(matches!(m.build(), Err(CliError::Schema(msg)) if msg.contains("symmetric")));
}

#[test]
fn exit_codes_follow_the_verdict() {
    assert_eq!(bin(&["check", "gallery:corollary35-pass"]).status.code(), Some(0));
    let out = bin(&["check", "gallery:drift-violation"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "Violated");
    let witnesses = report["check"]["vector"]["cond_c"][0]["witnesses"].as_array().unwrap();
    assert!(!witnesses.is_empty());
    assert!(witnesses[0]["margin"].as_f64().unwrap() < 0.0);

    assert_eq!(bin(&["check", "/nonexistent/scenario.json"]).status.code(), Some(2));
    assert_eq!(bin(&["check", "gallery:no-such-scenario"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["matrix-check", "gallery:example36"]).status.code(), Some(2));
    assert_eq!(bin(&["matrix-check", "gallery:matrix-pass"]).status.code(), Some(0));
    assert_eq!(bin(&["matrix-check", "gallery:matrix-drift-fail"]).status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unordered = write(dir.path(), "u.json", &MINIMAL.replace("\"x1\": [0.5]", "\"x1\": [-0.5]"));
    let out = bin(&["check", &unordered]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("order error"));
    let broken = write(dir.path(), "b.json", "{ \"kind\": ");
    assert_eq!(bin(&["check", &broken]).status.code(), Some(2));
}

#[test]
fn threads_variable_must_be_a_positive_integer() {
    let out = Command::new(env!("CARGO_BIN_EXE_jumpcompare"))
        .args(["check", "gallery:corollary35-pass"])
        .env("JUMPCOMPARE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_json_and_csv_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", MINIMAL);
    let out_dir = dir.path().join("out");
    let out = bin(&["simulate", &cfg, "--paths", "50", "--seed", "9", "--format", "csv", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("scenario.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 51);
    assert!(!csv.contains('\r') && csv.ends_with('\n'));
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(out_dir.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(report.mc.as_ref().unwrap().paths, 50);
    assert_eq!(report.mc.as_ref().unwrap().seed, 9);
    assert_eq!(report.agreement, Some(true));
    assert!(report.low_power);
    assert!(report.wall_clock_seconds.is_none());
}

#[test]
fn reports_are_reproducible_from_their_config_echo() {
    let o = Overrides {
        seed: Some(77),
        paths: Some(300),
        ..Overrides::default()
    };
    let (first, _) = run_simulate(gallery::scenario("sigma-gap-fail").unwrap(), &o).unwrap();
    assert_eq!(first.config.mc().seed, 77);
    let (again, _) = run_simulate(first.config.clone(), &Overrides::default()).unwrap();
    assert_eq!(again, first);
}

#[test]
fn simulate_examples_from_the_gallery() {
    let o = Overrides::default();
    for (id, fraction) in [("corollary35-pass", 0.0), ("example36", 0.0), ("drift-violation", 1.0)] {
        let (r, _) = run_simulate(gallery::scenario(id).unwrap(), &o).unwrap();
        let mc = r.mc.unwrap();
        assert_eq!(mc.paths, 10_000);
        assert_eq!(mc.violation_fraction, fraction, "{id}");
    }
}

#[test]
fn check_reports_have_no_simulation_section() {
    let r = run_check(gallery::scenario("corollary33-pass").unwrap(), &Overrides::default()).unwrap();
    assert_eq!(r.verdict, VerdictStatus::Holds);
    assert!(r.mc.is_none() && r.agreement.is_none() && !r.attention_needed);
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn smoke_gallery_completes_and_flags_low_power() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["gallery", "--smoke", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 10, "{stdout}");
    assert!(stdout.lines().all(|l| l.contains("low-power")));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gallery-summary.json")).unwrap()).unwrap();
    assert_eq!(summary["low_power"], true);
    assert_eq!(summary["scenarios"].as_array().unwrap().len(), 10);
    let expected = i32::from(!summary["attention_needed"].as_array().unwrap().is_empty());
    assert_eq!(out.status.code(), Some(expected));
}

#[test]
fn spotcheck_passes_ordered_pairs_and_flags_overshooting_jumps() {
    assert_eq!(bin(&["pide-spotcheck", "gallery:example36"]).status.code(), Some(0));
    let out = bin(&["pide-spotcheck", "gallery:jump-monotone-fail"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["spotcheck"]["max_interior_residual"].as_f64().unwrap() > 0.0);
    assert_eq!(bin(&["pide-spotcheck", "gallery:matrix-pass"]).status.code(), Some(2));
}

#[test]
fn timing_is_opt_in() {
    let out = bin(&["check", "gallery:corollary35-pass", "--timing"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["wall_clock_seconds"].as_f64().is_some());
}

#[test]
fn parse_config_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x.json", MINIMAL);
    assert!(parse_config(Path::new(&p)).is_ok());
    assert!(matches!(parse_config(&dir.path().join("missing.json")), Err(CliError::Io(_))));
}
