//! End-to-end tests of the `logwell` binary: output files, exit codes, and
//! determinism. Everything runs on a coarse grid with a trimmed analysis
//! budget so the whole file stays fast.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn logwell() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logwell"))
}

fn run(args: &[&str]) -> Output {
    logwell().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, expected: i32) {
    let code = output.status.code().expect("no signal");
    assert_eq!(
        code,
        expected,
        "exit {code}, expected {expected}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// A fast frame: coarse grid, trimmed analysis budget.
const FAST_CONFIG: &str = "\
[domain]
dim = 1
resolution = 48

[model]
p = 3.0

[initial_data]
mode = 1:1.0

[solver]
t_end = 1.0
dt_max = 0.05

[analysis]
ascent_starts = 2
ascent_iters = 120
directions = 60
refine_passes = 4
refine_top = 1
delta_grid = 33
";

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("experiment.cfg");
    fs::write(&path, text).expect("config written");
    path.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn analyze_outputs_are_byte_identical_across_reruns() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), FAST_CONFIG);
    let (out1, out2) = (tmp.path().join("run1"), tmp.path().join("run2"));
    for out in [&out1, &out2] {
        let output = run(&["analyze", "--config", &config, "--out", &out.to_string_lossy()]);
        assert_exit(&output, 0);
    }
    assert_eq!(
        read(&out1, "constants.json"),
        read(&out2, "constants.json"),
        "constants must not depend on the run"
    );
    assert_eq!(read(&out1, "well_curve.csv"), read(&out2, "well_curve.csv"));

    let csv = read(&out1, "well_curve.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,r,d_formula,d_nehari"));
    assert!(lines.count() >= 33, "curve grid rows missing");
}

#[test]
fn simulate_writes_the_trajectory_and_summary() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), FAST_CONFIG);
    let out = tmp.path().join("sim");
    let output = run(&["simulate", "--config", &config, "--out", &out.to_string_lossy()]);
    assert_exit(&output, 0);

    let csv = read(&out, "trajectory.csv");
    assert_eq!(
        csv.lines().next(),
        Some(
            "t,norm_l2,norm_h10,norm_h1sq,lp_pow,potential,nehari,ledger,\
             energy_residual,n,ndot,nddot,concavity_margin,dt"
        )
    );
    assert!(csv.lines().count() > 5, "trajectory rows missing");

    let summary: serde_json::Value = serde_json::from_str(&read(&out, "summary.json")).unwrap();
    assert_eq!(summary["outcome"], "completed");
    assert_eq!(summary["regime"], "GlobalDecay");
    assert_eq!(summary["decay"]["bound_holds"], true);
    assert!(summary["max_energy_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn classify_report_round_trips_as_json() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), FAST_CONFIG);
    let out = tmp.path().join("cls");
    let output = run(&["classify", "--config", &config, "--out", &out.to_string_lossy()]);
    assert_exit(&output, 0);

    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(report["regime"], "GlobalDecay");
    assert!(report["i0"].as_f64().unwrap() > 0.0);
    assert!(report["j0"].as_f64().unwrap() < report["d_hat"].as_f64().unwrap());
    assert!(report["mu_pred"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_brackets_the_decay_to_blowup_transition() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), FAST_CONFIG);
    let out = tmp.path().join("sweep");
    let output = run(&[
        "sweep",
        "--config",
        &config,
        "--out",
        &out.to_string_lossy(),
        "--min",
        "0.5",
        "--max",
        "8.0",
        "--points",
        "10",
    ]);
    assert_exit(&output, 0);

    let csv = read(&out, "sweep.csv");
    assert_eq!(csv.lines().next(), Some("amplitude,j0,i0,regime,outcome"));
    assert!(csv.contains("GlobalDecay") && csv.contains("Blowup"));

    let doc: serde_json::Value = serde_json::from_str(&read(&out, "sweep.json")).unwrap();
    let last_decay = doc["last_decay_amplitude"].as_f64().expect("decay seen");
    let first_blowup = doc["first_blowup_amplitude"].as_f64().expect("blow-up seen");
    assert!(
        last_decay < first_blowup,
        "bracket out of order: {last_decay} !< {first_blowup}"
    );
}

#[test]
fn sweep_outputs_do_not_depend_on_the_worker_count() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), FAST_CONFIG);
    let (out1, out2) = (tmp.path().join("w1"), tmp.path().join("w3"));
    for (workers, out) in [("1", &out1), ("3", &out2)] {
        let output = logwell()
            .env("LOGWELL_WORKERS", workers)
            .args([
                "sweep",
                "--config",
                &config,
                "--out",
                &out.to_string_lossy(),
                "--min",
                "0.5",
                "--max",
                "6.0",
                "--points",
                "6",
            ])
            .output()
            .expect("binary runs");
        assert_exit(&output, 0);
    }
    assert_eq!(read(&out1, "sweep.csv"), read(&out2, "sweep.csv"));
    assert_eq!(read(&out1, "sweep.json"), read(&out2, "sweep.json"));
}

#[test]
fn verify_passes_cleanly_and_fault_injection_fails() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), FAST_CONFIG);
    let out = tmp.path().join("verify");
    let output = run(&["verify", "--config", &config, "--out", &out.to_string_lossy()]);
    assert_exit(&output, 0);
    let report: serde_json::Value = serde_json::from_str(&read(&out, "verify.json")).unwrap();
    assert_eq!(report["passed"], true);
    let properties = report["properties"].as_array().unwrap();
    assert!(properties.len() >= 7, "property suites missing");
    for suite in properties {
        assert_eq!(suite["passed"], true, "suite failed: {suite}");
        assert!(suite["cases"].as_u64().unwrap() > 0);
    }

    let out_fault = tmp.path().join("fault");
    let output = run(&[
        "verify",
        "--config",
        &config,
        "--out",
        &out_fault.to_string_lossy(),
        "--inject-fault",
    ]);
    assert_exit(&output, 1);
    let report: serde_json::Value =
        serde_json::from_str(&read(&out_fault, "verify.json")).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["properties"][0]["name"], "combination_identity");
    assert_eq!(report["properties"][0]["passed"], false);
}

#[test]
fn verify_verdicts_are_stable_across_seeds() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), FAST_CONFIG);
    for seed in ["1", "7", "1234567"] {
        let out = tmp.path().join(format!("seed{seed}"));
        let output = run(&[
            "verify",
            "--config",
            &config,
            "--seed",
            seed,
            "--out",
            &out.to_string_lossy(),
        ]);
        assert_exit(&output, 0);
    }
}

#[test]
fn configuration_problems_exit_with_code_2() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(tmp.path(), "p = 3.0\n");
    let output = run(&["analyze", "--config", &bad, "--out", "."]);
    assert_exit(&output, 2);

    let output = run(&["classify"]);
    assert_exit(&output, 2);

    let output = run(&["analyze", "--preset", "S9_unknown", "--out", "."]);
    assert_exit(&output, 2);

    let output = run(&["frobnicate"]);
    assert_exit(&output, 2);

    let output = logwell()
        .env("LOGWELL_WORKERS", "many")
        .args(["verify"])
        .output()
        .expect("binary runs");
    assert_exit(&output, 2);
}

#[test]
fn preset_simulation_confirms_the_advertised_regime() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s1");
    let output = run(&[
        "simulate",
        "--preset",
        "S1_subcritical_decay",
        "--out",
        &out.to_string_lossy(),
    ]);
    assert_exit(&output, 0);
    let summary: serde_json::Value = serde_json::from_str(&read(&out, "summary.json")).unwrap();
    assert_eq!(summary["outcome"], "completed");
    assert_eq!(summary["regime"], "GlobalDecay");
    assert_eq!(summary["decay"]["bound_holds"], true);
}
