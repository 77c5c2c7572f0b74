use std::fs;
use std::process::Command as Process;

use maxwell_dg::analysis::{Formulation, ProblemKind};
use maxwell_dg::cli::{constants_table, parse_config, run, write_outputs, AlphaPolicy, AutoTag, Command};
use maxwell_dg::Error;

const MINIMAL: &str = r#"{"mesh": "square:2", "degree": 1, "k": 1.0, "problem": "sine"}"#;

fn config(extra: &str) -> String {
    format!(r#"{{"mesh": "square:2", "degree": 1, "k": 1.0, "problem": "sine"{extra}}}"#)
}

#[test]
fn minimal_config_uses_defaults() {
    let (cfg, warnings) = parse_config(MINIMAL).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(cfg.problem, ProblemKind::Sine);
    assert_eq!(cfg.alpha, AlphaPolicy::Named(AutoTag::Auto));
    assert_eq!(cfg.gamma, 0.5);
    assert_eq!(cfg.levels, 1);
    assert_eq!(cfg.formulation, Formulation::Primal);
    assert!(cfg.materials.is_empty() && cfg.output.is_none() && cfg.command.is_none());
}

#[test]
fn low_alpha_warns_with_threshold() {
    let (_, warnings) = parse_config(&config(r#", "alpha": 3.0"#)).unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].contains("6.5"), "{}", warnings[0]);
    let (_, warnings) = parse_config(&config(r#", "alpha": 6.5"#)).unwrap();
    assert!(warnings.is_empty());
}

#[test]
fn malformed_json_reports_position() {
    let err = parse_config("{\n  \"mesh\": \"square:2\",\n  \"degree\": 1,,\n}").unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Config(_)));
    assert!(msg.contains("line 3"), "{msg}");
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    assert!(matches!(
        parse_config(&config(r#", "colour": 1"#)),
        Err(Error::Config(_))
    ));
    assert!(parse_config(&config(r#", "levels": 0"#)).is_err());
    assert!(parse_config(r#"{"mesh": "square:2", "degree": 3, "k": 1.0, "problem": "sine"}"#).is_err());
    assert!(parse_config(r#"{"mesh": "square:0", "degree": 1, "k": 1.0, "problem": "sine"}"#).is_err());
}

#[test]
fn anisotropic_materials_parse() {
    let (cfg, _) = parse_config(&config(
        r#", "materials": [{"mu": 1.0, "epsilon": [[2.0, 0.1], [0.1, 1.0]]}]"#,
    ))
    .unwrap();
    let out = run(Command::Solve, &cfg).unwrap();
    assert!(out.primary.contains("\"error_v\""));
}

#[test]
fn study_table_has_one_row_per_level() {
    let (cfg, _) = parse_config(&config(r#", "levels": 4"#)).unwrap();
    let out = run(Command::Study, &cfg).unwrap();
    let rows: Vec<&str> = out.primary.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let eoc_column = |row: &str| row.split(',').nth(5).unwrap().to_string();
    assert!(eoc_column(rows[0]).is_empty());
    assert!(rows[1..].iter().all(|r| eoc_column(r).parse::<f64>().is_ok()));
    let exts: Vec<_> = out.files.iter().map(|(e, _)| *e).collect();
    assert_eq!(exts, ["csv", "md", "json"]);
}

#[test]
fn study_is_deterministic() {
    let (cfg, _) =
        parse_config(r#"{"mesh": "square:2", "degree": 2, "k": 1.0, "problem": "sine", "levels": 3}"#).unwrap();
    let a = run(Command::Study, &cfg).unwrap();
    let b = run(Command::Study, &cfg).unwrap();
    assert_eq!(a.primary.as_bytes(), b.primary.as_bytes());
}

#[test]
fn zero_problem_solves_to_zero() {
    for formulation in ["primal", "auxiliary"] {
        let text = format!(
            r#"{{"mesh": "square:3", "degree": 2, "k": 1.0, "problem": "zero", "formulation": "{formulation}"}}"#
        );
        let (cfg, _) = parse_config(&text).unwrap();
        let out = run(Command::Solve, &cfg).unwrap();
        let report: serde_json::Value = serde_json::from_str(&out.primary).unwrap();
        for key in ["norm_u_v", "seminorm_u_v", "norm_p_q", "error_v", "error_q"] {
            let v = report[key].as_f64().unwrap();
            assert!(v.abs() <= 1e-12, "{key} = {v}");
        }
        assert_eq!(report["norm_lambda_m"].is_null(), formulation == "primal");
    }
}

#[test]
fn constants_table_has_drift_column() {
    let (cfg, _) =
        parse_config(r#"{"mesh": "square:2", "degree": 1, "k": 1.0, "problem": "zero", "levels": 3}"#).unwrap();
    let rows = constants_table(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].drift, 0.0);
    assert!(rows
        .iter()
        .all(|r| r.friedrichs > 0.0 && r.kappa_b > 0.0 && r.kappa_a > 0.0 && r.infsup_k > 0.0));
    let out = run(Command::Constants, &cfg).unwrap();
    assert!(out.primary.lines().next().unwrap().ends_with(",drift"));
    assert_eq!(out.primary.lines().count(), 4);
}

#[test]
fn outputs_are_written_next_to_base() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = parse_config(&config(r#", "levels": 2"#)).unwrap();
    let out = run(Command::Study, &cfg).unwrap();
    let written = write_outputs(&dir.path().join("nested/run"), &out).unwrap();
    assert_eq!(written.len(), 3);
    assert_eq!(
        fs::read_to_string(dir.path().join("nested/run.csv")).unwrap(),
        out.primary
    );
}

fn binary(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_maxwelldg"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, config(r#", "alpha": 2.0"#)).unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"mesh\": ").unwrap();

    let ok = binary(&["study", "--config", good.to_str().unwrap(), "--levels", "2"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(String::from_utf8_lossy(&ok.stdout).lines().count(), 3);
    assert!(String::from_utf8_lossy(&ok.stderr).contains("warning: alpha"));

    let base = dir.path().join("out/solve");
    let ok = binary(&[
        "solve",
        "--config",
        good.to_str().unwrap(),
        "--output",
        base.to_str().unwrap(),
    ]);
    assert!(ok.status.success());
    assert!(dir.path().join("out/solve.json").exists() && dir.path().join("out/solve.timing.json").exists());

    let err = binary(&["study", "--config", bad.to_str().unwrap()]);
    assert!(!err.status.success());
    assert!(String::from_utf8_lossy(&err.stderr).starts_with("error: "));

    let err = binary(&["study", "--config", good.to_str().unwrap(), "--degree", "5"]);
    assert!(!err.status.success());
}
