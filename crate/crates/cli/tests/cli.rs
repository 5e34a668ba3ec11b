use std::path::Path;
use std::process::{Command, Output};

use axisym_cli::config::{Scenario, ScenarioConfig};
use axisym_cli::report::Status;
use axisym_cli::run_scenario;

fn axisym(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axisym"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

#[test]
fn version_and_reference_config() {
    let d = tempfile::tempdir().unwrap();
    let v = axisym(&["version"], d.path());
    assert!(v.status.success());
    assert_eq!(
        String::from_utf8(v.stdout).unwrap(),
        format!("axisym {}\n", env!("CARGO_PKG_VERSION"))
    );
    let r = axisym(&["reference-config"], d.path());
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    assert_eq!(
        ScenarioConfig::from_toml(&text).unwrap(),
        ScenarioConfig::new(Scenario::BlowupExterior)
    );
}

#[test]
fn validate_reports_descriptive_messages() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "ok.toml", "scenario = \"blowup-exterior\"\n");
    let ok = axisym(&["validate", "ok.toml"], d.path());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));

    write(
        d.path(),
        "beta.toml",
        "scenario = \"blowup-exterior\"\n[model]\nalpha = 2.5\nbeta = 5.0\n",
    );
    let out = axisym(&["validate", "beta.toml"], d.path());
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let msgs: Vec<&str> = json["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["message"].as_str().unwrap())
        .collect();
    assert!(msgs
        .iter()
        .any(|m| m.starts_with("beta below the exterior threshold 2+2√(1+π²/4) = 5.72419")));

    write(
        d.path(),
        "alpha.toml",
        "scenario = \"blowup-interior\"\n[model]\nalpha = 4.0\n",
    );
    let out = axisym(&["validate", "alpha.toml"], d.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("interior alpha must satisfy 0 < alpha < √λ₁ = 3.83171"));
}

#[test]
fn inadmissible_data_is_rejected_before_running() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "weak.toml",
        "scenario = \"blowup-exterior\"\n[data]\nb = 1.0\n",
    );
    let out = axisym(&["run", "weak.toml"], d.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("quadratic-cubic condition"));
    assert!(!d.path().join("series.csv").exists());
}

#[test]
fn missing_config_is_an_error() {
    let d = tempfile::tempdir().unwrap();
    let out = axisym(&["run", "absent.toml"], d.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let body = "scenario = \"oracle-sweep\"\n[output]\ncsv = \"o.csv\"\nsummary = \"o.json\"\n";
    let mut seen = Vec::new();
    for _ in 0..2 {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "c.toml", body);
        assert!(axisym(&["run", "c.toml"], d.path()).status.success());
        seen.push((
            std::fs::read(d.path().join("o.csv")).unwrap(),
            std::fs::read(d.path().join("o.json")).unwrap(),
        ));
    }
    assert_eq!(seen[0], seen[1]);
    let csv = String::from_utf8(seen[0].0.clone()).unwrap();
    assert!(csv.starts_with("y0,c0,t_star,horizon_t,max_rel_error,drift,steps,steeper_blowup_t\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn summary_keys_are_stable_and_every_verdict_has_an_anchor() {
    let out = run_scenario(&ScenarioConfig::new(Scenario::OracleSweep)).unwrap();
    let text = String::from_utf8(out.summary.to_bytes().unwrap()).unwrap();
    let keys = [
        "\"scenario\"",
        "\"version\"",
        "\"grid\"",
        "\"parameters\"",
        "\"metrics\"",
        "\"t_star\"",
        "\"t_detect\"",
        "\"termination\"",
        "\"steps\"",
        "\"resolution\"",
        "\"verdicts\"",
        "\"all_pass\"",
    ];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
    assert!(out.summary.verdicts.iter().all(|v| !v.anchor.is_empty()));
    assert!(out.summary.all_pass);
}

#[test]
fn zero_decay_data_stays_zero() {
    let mut cfg = ScenarioConfig::new(Scenario::GlobalDecay);
    cfg.data.decay_amplitude = 0.0;
    cfg.step.t_end = Some(1.0);
    let out = run_scenario(&cfg).unwrap();
    let s = &out.summary;
    assert!(s.all_pass, "{:?}", s.verdicts);
    assert_eq!(s.metrics["max_sup_v"], Some(0.0));
    assert_eq!(s.metrics["decay_exponent"], None);
}

#[test]
fn interior_blowup_is_detected() {
    let mut cfg = ScenarioConfig::new(Scenario::BlowupInterior);
    cfg.grid.nr = 129;
    cfg.grid.nz = 33;
    let out = run_scenario(&cfg).unwrap();
    let s = &out.summary;
    assert!(s.all_pass, "{:?}", s.verdicts);
    assert_eq!(s.find("finite-time-growth").unwrap().status, Status::Pass);
    assert!(s.find("flux-evolution-identity").is_none());
}

#[test]
fn canonical_exterior_run_passes_every_verdict() {
    let out = run_scenario(&ScenarioConfig::new(Scenario::BlowupExterior)).unwrap();
    let s = &out.summary;
    assert!(s.all_pass, "{:?}", s.verdicts);
    assert!(s.t_detect.unwrap() <= s.t_star.unwrap());
    assert_eq!(out.table.header.len(), 18);
}
