use std::path::Path;
use std::process::{Command, Output};

use carl_core::experiments::{run_scenario, Scenario};
use carl_core::io::write_trace_csv;

fn carl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carl")).args(args).env_remove("CARL_SIM_CONFIG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// fig2 cut down to a fraction of a millisecond.
fn short_scenario(dir: &Path) -> (Scenario, String) {
    let mut s = Scenario::preset("fig2").unwrap();
    s.config.duration = 2e-4;
    s.initial.n_sim = 40;
    s.analysis.window = Some(5e-5);
    let path = dir.join("short.json");
    std::fs::write(&path, serde_json::to_string(&s).unwrap()).unwrap();
    (s, path.to_str().unwrap().to_string())
}

#[test]
fn derive_reports_the_linewidth() {
    let out = stdout(&carl(&["derive"]));
    let kappa = out.lines().find(|l| l.starts_with("kappa,")).unwrap();
    let v: f64 = kappa.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v / 22.04e3 - 1.0).abs() < 1e-3, "{kappa}");
    assert!(kappa.ends_with(",Hz"));
    let angular = stdout(&carl(&["--angular", "derive"]));
    assert!(angular.contains("kappa,138"), "{angular}");
}

#[test]
fn exit_codes_separate_usage_from_validation() {
    assert_eq!(carl(&["bogus"]).status.code(), Some(2));
    assert_eq!(carl(&["derive", "--power", "x"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": 1}"#).unwrap();
    let o = carl(&["simulate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
    assert_eq!(carl(&["preset", "nope"]).status.code(), Some(3));
    assert_eq!(carl(&["threshold", "--axis", "atoms", "--values", "1e6", "--bracket", "1"]).status.code(), Some(3));
}

#[test]
fn fig3_run_chirps_after_release() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("fig3");
    let run = run.to_str().unwrap();
    stdout(&carl(&["simulate", "--scenario", "fig3", "--out", run]));
    let s = Scenario::preset("fig3").unwrap();
    let release = s.schedule.iter().map(|e| e.time).fold(0.0, f64::max);
    let from = (release + 1.5e-4).to_string();
    let release = release.to_string();
    let args = ["--format", "json", "analyze", "--trace", run, "--window", "8e-6", "--fit-from", &from, "--origin", &release];
    let a: serde_json::Value = serde_json::from_str(&stdout(&carl(&args))).unwrap();
    let exponent = a["power_law"]["exponent"].as_f64().unwrap();
    assert!((exponent - 1.0 / 3.0).abs() < 0.03, "{exponent}");
}

#[test]
fn simulate_is_a_thin_adapter() {
    let dir = tempfile::tempdir().unwrap();
    let (s, path) = short_scenario(dir.path());
    let a = carl(&["--format", "csv", "simulate", "--scenario", &path]);
    let b = carl(&["--format", "csv", "simulate", "--scenario", &path]);
    assert_eq!(stdout(&a), stdout(&b));
    let mut lib = Vec::new();
    write_trace_csv(&run_scenario(&s).unwrap().trace, &mut lib).unwrap();
    assert_eq!(a.stdout, lib);
    let other = carl(&["--format", "csv", "simulate", "--scenario", &path, "--seed", "99"]);
    assert_ne!(stdout(&other), stdout(&a));
}

#[test]
fn scenario_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = short_scenario(dir.path());
    let direct = stdout(&carl(&["simulate", "--scenario", &path]));
    let o = Command::new(env!("CARGO_BIN_EXE_carl")).arg("simulate").env("CARL_SIM_CONFIG", &path).output().unwrap();
    assert_eq!(stdout(&o), direct);
    let summary: serde_json::Value = serde_json::from_str(&direct).unwrap();
    assert!(summary.is_object());
    assert_eq!(carl(&["simulate"]).status.code(), Some(3));
}

#[test]
fn run_directory_feeds_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = short_scenario(dir.path());
    let run = dir.path().join("run");
    let run = run.to_str().unwrap();
    stdout(&carl(&["simulate", "--scenario", &path, "--out", run]));
    for f in ["manifest.json", "trace.csv", "scenario.json", "summary.json"] {
        assert!(Path::new(run).join(f).is_file(), "{f}");
    }
    // an existing directory is never overwritten
    assert_ne!(carl(&["simulate", "--scenario", &path, "--out", run]).status.code(), Some(0));
    let out = stdout(&carl(&["analyze", "--trace", run, "--window", "5e-5"]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("t,frequency,contrast,present"));
    assert!(lines.count() > 2);
}

#[test]
fn rir_synth_pipes_into_fit() {
    let dir = tempfile::tempdir().unwrap();
    let spectrum = dir.path().join("w.csv");
    std::fs::write(&spectrum, stdout(&carl(&["rir", "synth", "--dkv", "600e3"]))).unwrap();
    let out = stdout(&carl(&["--format", "json", "rir", "fit", "--input", spectrum.to_str().unwrap()]));
    let fit: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((fit["doppler_shift"].as_f64().unwrap() / 600e3 - 1.0).abs() < 1e-6, "{fit}");
    assert_eq!(fit["unit"], "Hz");
    let e = &fit["ensembles"];
    assert!((e[0]["temperature"].as_f64().unwrap() / 300e-6 - 1.0).abs() < 1e-6);
    assert!((e[1]["temperature"].as_f64().unwrap() / 200e-6 - 1.0).abs() < 1e-6);
    assert!((e[1]["atom_number"].as_f64().unwrap() / e[0]["atom_number"].as_f64().unwrap() - 0.9).abs() < 1e-6);
}

#[test]
fn bragg_beat_and_demod() {
    let out = stdout(&carl(&["bragg", "beat", "--dwj", "53e3", "--kv", "37e3"]));
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((r["predicted"].as_f64().unwrap() - 16e3).abs() < 1e-6);
    let measured = r["measured"].as_f64().unwrap();
    assert!((measured - 16e3).abs() < r["resolution"].as_f64().unwrap());

    let dir = tempfile::tempdir().unwrap();
    let signal = dir.path().join("s.csv");
    let signal = signal.to_str().unwrap();
    stdout(&carl(&["bragg", "beat", "--dwj", "53e3", "--kv", "37e3", "--signal", signal]));
    let demod = stdout(&carl(&["bragg", "demod", "--input", signal, "--reference", "16e3", "--bandwidth", "2e3"]));
    let mut lines = demod.lines();
    assert_eq!(lines.next(), Some("t,amplitude,phase"));
    assert!(lines.count() > 100);
}

#[test]
fn analytic_tables() {
    let out = stdout(&carl(&["analytic", "beat-frequency", "--from", "1", "--to", "2", "--points", "2"]));
    assert_eq!(out, "kv,beat_frequency\n1,2\n2,4\n");
    let out = stdout(&carl(&["analytic", "carl-frequency", "--from", "1e-6", "--to", "1e-3", "--points", "4", "--log"]));
    assert_eq!(out.lines().count(), 5);
    assert_eq!(carl(&["analytic", "carl-frequency", "--from", "1", "--to", "1", "--points", "0"]).status.code(), Some(3));
}
