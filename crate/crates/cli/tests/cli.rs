//! End-to-end tests of the command-line interface: exit-code
//! contract, output formats and CSV determinism.

use std::io::Write;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semistab"))
}

fn write_config(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().expect("temp file");
    f.write_all(body.as_bytes()).expect("write config");
    f
}

#[test]
fn analyze_exit_codes_follow_the_verdict() {
    let stable = write_config("family = lasota\nh_const = -0.5\np = 2\n");
    let out = bin().arg("analyze").arg(stable.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Stable"));

    let unstable = write_config("family = lasota\nh_const = -0.4\np = 2\n");
    let out = bin().arg("analyze").arg(unstable.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_rejects_bad_exponent_with_exit_3() {
    let bad = write_config("family = lasota\np = 0.5\n");
    let out = bin().arg("analyze").arg(bad.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("p must be >= 1"), "{}", err);
}

#[test]
fn analyze_missing_file_is_a_config_error() {
    let out = bin()
        .arg("analyze")
        .arg("/nonexistent/path.cfg")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn analyze_json_is_well_formed() {
    let cfg = write_config("family = lasota\nh_const = -0.5\np = 2\n");
    let out = bin()
        .arg("analyze")
        .arg(cfg.path())
        .arg("--json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid json");
    assert_eq!(v["verdicts"][0][0], "Lp");
    assert_eq!(v["verdicts"][0][1]["status"], "Stable");
    assert!(v["admissibility"]["refuted"] == serde_json::Value::Bool(false));
}

#[test]
fn analyze_sobolev_space_reports_both_verdicts() {
    let cfg = write_config("family = lasota\nh_const = 0.4\np = 2\nspace = W1p\n");
    let out = bin()
        .arg("analyze")
        .arg(cfg.path())
        .arg("--json")
        .output()
        .unwrap();
    // stable on the vanishing subspace, unstable on the full space
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid json");
    assert_eq!(v["verdicts"][0][0], "W1p_star");
    assert_eq!(v["verdicts"][0][1]["status"], "Stable");
    assert_eq!(v["verdicts"][1][0], "W1p");
    assert_eq!(v["verdicts"][1][1]["status"], "Unstable");
}

#[test]
fn simulate_matches_the_closed_form_decay() {
    let cfg = write_config("family = lasota\nh_const = -0.5\np = 2\n");
    let out = bin()
        .arg("simulate")
        .arg(cfg.path())
        .args(["--f", "1", "--horizon", "10", "--steps", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut rows = 0;
    for line in text.lines().skip(2) {
        let cells: Vec<&str> = line.split(',').collect();
        let t: f64 = cells[0].parse().unwrap();
        let norm: f64 = cells[1].parse().unwrap();
        let expected = (-0.5 * t).exp();
        assert!(
            (norm - expected).abs() <= 1e-6 * expected,
            "t = {}: {} vs {}",
            t,
            norm,
            expected
        );
        rows += 1;
    }
    assert_eq!(rows, 11);
}

#[test]
fn simulate_steps_one_gives_two_rows() {
    let cfg = write_config("family = lasota\nh_const = -0.5\np = 2\n");
    let out = bin()
        .arg("simulate")
        .arg(cfg.path())
        .args(["--steps", "1", "--horizon", "4"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    // timestamped header + column header + 2 data rows
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn simulate_rejects_functions_outside_the_space() {
    let cfg = write_config("family = lasota\nh_const = -0.5\np = 2\n");
    let out = bin()
        .arg("simulate")
        .arg(cfg.path())
        .args(["--f", "x^-0.6", "--f-singularity", "0.6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not in the space"));
}

#[test]
fn simulate_csv_bodies_are_deterministic() {
    let cfg = write_config("family = lasota\nh_const = -0.5\np = 2\n");
    let run = || {
        let out = bin()
            .arg("simulate")
            .arg(cfg.path())
            .args(["--f", "x", "--horizon", "5", "--steps", "20"])
            .output()
            .unwrap();
        let text = String::from_utf8_lossy(&out.stdout).to_string();
        // strip the timestamped header line
        text.lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(run(), run());
}

#[test]
fn reproduce_suites_agree_and_unknown_suite_errors() {
    for suite in ["lasota_lp", "examples_sec2"] {
        let out = bin().arg("reproduce").arg(suite).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "suite {}", suite);
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(!text.contains("DISAGREE"), "{}", text);
    }
    let out = bin().arg("reproduce").arg("bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn admissibility_reports_the_fit() {
    let cfg = write_config("family = lasota\nh_const = -0.5\np = 2\n");
    let out = bin()
        .arg("admissibility")
        .arg(cfg.path())
        .arg("--json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid json");
    let omega = v["omega"].as_f64().unwrap();
    assert!((omega - 0.0).abs() < 1e-6, "omega = {}", omega);
    assert_eq!(v["refuted"], serde_json::Value::Bool(false));
}

#[test]
fn hypercyclicity_candidacy_matches_the_threshold() {
    let candidate = write_config("family = lasota\nh_const = -0.25\np = 2\n");
    let out = bin()
        .arg("hypercyclicity")
        .arg(candidate.path())
        .arg("--json")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid json");
    assert_eq!(v["candidate"], serde_json::Value::Bool(true));

    let not_candidate = write_config("family = lasota\nh_const = -0.75\np = 2\n");
    let out = bin()
        .arg("hypercyclicity")
        .arg(not_candidate.path())
        .arg("--json")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid json");
    assert_eq!(v["candidate"], serde_json::Value::Bool(false));
}

#[test]
fn tolerance_flags_are_accepted() {
    let cfg = write_config("family = lasota\nh_const = -0.5\np = 2\n");
    let out = bin()
        .arg("analyze")
        .arg(cfg.path())
        .args(["--slope-tol", "1e-3", "--tol-quad", "1e-9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
