use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cavity_sense_core::config::ExperimentConfig;
use cavity_sense_core::optics::derive_cavity;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_in(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cavity-sense"));
    cmd.current_dir(dir)
        .args(args)
        .env_remove("CAVITY_SENSE_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().expect("binary runs");
    Run {
        code: status.code().expect("exited normally"),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn run(args: &[&str]) -> Run {
    let dir = TempDir::new().unwrap();
    run_in(dir.path(), args, &[])
}

fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .trim()
        .parse()
        .unwrap()
}

fn inline_field(line: &str, key: &str) -> f64 {
    let mut it = line.split_whitespace();
    while let Some(tok) = it.next() {
        if tok == format!("{key}:") {
            return it.next().unwrap().parse().unwrap();
        }
    }
    panic!("no {key} in {line}")
}

fn csv_columns(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn params_reports_derived_quantities() {
    let r = run(&["params"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(rel(field(&r.stdout, "finesse"), 37_178.6) < 1e-5);
    assert!(rel(field(&r.stdout, "free_spectral_range_hz"), 1.4141e11) < 1e-4);
    assert!(rel(field(&r.stdout, "bandwidth_hz"), 1.9018e6) < 1e-4);
    assert!((field(&r.stdout, "spatial_overlap") - 0.99965).abs() < 1e-5);
    assert!(rel(field(&r.stdout, "effective_mass_kg"), 1.98e-4) < 0.01);
    assert!(!r.stdout.contains("warning"));
}

#[test]
fn params_compares_measured_finesse() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("close.cfg"), "measured_finesse = 37000\n").unwrap();
    fs::write(dir.path().join("far.cfg"), "measured_finesse = 30000\n").unwrap();

    let r = run_in(dir.path(), &["params", "--config", "close.cfg"], &[]);
    assert_eq!(r.code, 0);
    assert_eq!(field(&r.stdout, "finesse_measured"), 37_000.0);
    assert!((field(&r.stdout, "finesse_deviation_percent") + 0.48).abs() < 0.005);
    assert!(!r.stderr.contains("warning"));

    let r = run_in(dir.path(), &["params", "--config", "far.cfg"], &[]);
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("warning"), "{}", r.stderr);
    assert!(r.stdout.contains("warning"));
}

#[test]
fn lossless_cavity_is_rejected_with_key_names() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("bad.cfg"),
        "coupler_transmission_ppm = 0\ncavity_losses_ppm = 0\n",
    )
    .unwrap();
    let r = run_in(dir.path(), &["params", "--config", "bad.cfg"], &[]);
    assert_eq!(r.code, 1);
    assert!(
        r.stderr.contains("coupler_transmission") && r.stderr.contains("cavity_losses"),
        "{}",
        r.stderr
    );
}

#[test]
fn missing_config_file_is_an_io_error() {
    let r = run(&["params", "--config", "nowhere.cfg"]);
    assert_eq!(r.code, 3);
}

#[test]
fn local_config_file_is_picked_up() {
    let dir = TempDir::new().unwrap();
    let base = run_in(dir.path(), &["sensitivity", "--freq", "0"], &[]);
    fs::write(dir.path().join("experiment.cfg"), "power_uW = 400\n").unwrap();
    let local = run_in(dir.path(), &["sensitivity", "--freq", "0"], &[]);
    let ratio = inline_field(&base.stdout, "dx_min_m_per_rthz")
        / inline_field(&local.stdout, "dx_min_m_per_rthz");
    assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
}

#[test]
fn unknown_flag_and_unknown_key_are_validation_errors() {
    assert_eq!(run(&["params", "--bogus"]).code, 1);
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("typo.cfg"), "cavity_lenght_mm = 1\n").unwrap();
    let r = run_in(dir.path(), &["params", "--config", "typo.cfg"], &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 1"), "{}", r.stderr);
}

#[test]
fn sensitivity_at_reference_frequencies() {
    let r = run(&["sensitivity", "--freq", "2e6"]);
    assert_eq!(r.code, 0);
    let dx = inline_field(&r.stdout, "dx_min_m_per_rthz");
    assert!(rel(dx, 2.8e-19) < 0.05, "{dx}");
    assert!(rel(dx, 2.8894e-19) < 1e-4);
    assert!(rel(inline_field(&r.stdout, "fm_floor_hz_per_rthz"), 0.10089) < 1e-4);

    let r = run(&["sensitivity", "--freq", "5e5"]);
    assert!(rel(inline_field(&r.stdout, "dx_min_m_per_rthz"), 2e-19) < 0.05);
}

#[test]
fn sensitivity_sweep_is_monotone_with_sqrt2_at_bandwidth() {
    let r = run(&["sensitivity", "--sweep", "0:4e6:41"]);
    assert_eq!(r.code, 0);
    let rows = csv_columns(&r.stdout);
    assert_eq!(rows.len(), 41);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]));

    let bw = derive_cavity(&ExperimentConfig::default().cavity)
        .unwrap()
        .bandwidth;
    let r = run(&["sensitivity", "--sweep", &format!("0:{bw:e}:2")]);
    let rows = csv_columns(&r.stdout);
    assert!((rows[1][1] / rows[0][1] - 2f64.sqrt()).abs() < 1e-12);
    assert!((rows[1][2] / rows[0][2] - 2f64.sqrt()).abs() < 1e-12);

    assert_eq!(run(&["sensitivity", "--sweep", "0:4e6"]).code, 1);
    assert_eq!(
        run(&["sensitivity", "--freq", "1", "--sweep", "0:1:2"]).code,
        1
    );
}

#[test]
fn analytic_spectra_peak_values() {
    let r = run(&["spectrum", "thermal", "--analytic", "--points", "501"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_columns(&r.stdout);
    let peak = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    assert!(rel(peak, 2.2236e4) < 1e-3, "{peak}");
    assert!(r.stderr.contains("dB re shot noise"));

    let r = run(&["spectrum", "excitation", "--analytic", "--points", "501"]);
    let rows = csv_columns(&r.stdout);
    let peak = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    assert!(rel(peak, 1.7097e7) < 1e-3, "{peak}");
}

#[test]
fn spectrum_seed_precedence_and_determinism() {
    let dir = TempDir::new().unwrap();
    let a = run_in(dir.path(), &["spectrum", "thermal", "--seed", "7"], &[]);
    let b = run_in(dir.path(), &["spectrum", "thermal", "--seed", "7"], &[]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);

    let env7 = run_in(
        dir.path(),
        &["spectrum", "thermal"],
        &[("CAVITY_SENSE_SEED", "7")],
    );
    assert_eq!(env7.stdout, a.stdout);
    let flag_wins = run_in(
        dir.path(),
        &["spectrum", "thermal", "--seed", "7"],
        &[("CAVITY_SENSE_SEED", "8")],
    );
    assert_eq!(flag_wins.stdout, a.stdout);
    let config_seed = run_in(dir.path(), &["spectrum", "thermal"], &[]);
    let seed1 = run_in(dir.path(), &["spectrum", "thermal", "--seed", "1"], &[]);
    assert_eq!(config_seed.stdout, seed1.stdout);
    assert_ne!(config_seed.stdout, a.stdout);

    let bad = run_in(
        dir.path(),
        &["spectrum", "thermal"],
        &[("CAVITY_SENSE_SEED", "x")],
    );
    assert_eq!(bad.code, 1);
}

#[test]
fn spectrum_to_output_file_and_bad_analyzer_flags() {
    let dir = TempDir::new().unwrap();
    let r = run_in(
        dir.path(),
        &["spectrum", "thermal", "--output", "t.csv", "--points", "50"],
        &[],
    );
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    assert_eq!(
        fs::read_to_string(dir.path().join("t.csv"))
            .unwrap()
            .lines()
            .count(),
        51
    );
    assert_eq!(run(&["spectrum", "thermal", "--points", "1"]).code, 1);
    assert_eq!(run(&["spectrum", "thermal", "--rbw", "0"]).code, 1);
    let r = run_in(
        dir.path(),
        &["spectrum", "thermal", "--output", "missing/dir/t.csv"],
        &[],
    );
    assert_eq!(r.code, 3);
}

#[test]
fn calibrate_reports_slope_two() {
    let r = run(&["calibrate", "--amplitudes", "0.01,0.03,0.1,0.3,1"]);
    assert_eq!(r.code, 0);
    assert!((field(&r.stderr, "log_log_slope") - 2.0).abs() < 1e-6);
    let rows = csv_columns(&r.stdout);
    assert_eq!(rows.len(), 5);

    let r = run(&[
        "calibrate",
        "--amplitudes",
        "0.0962,1",
        "--freq",
        "2e6",
        "--rbw",
        "1",
    ]);
    let rows = csv_columns(&r.stdout);
    assert!(rel(rows[0][1], 0.4546) < 1e-3);
    assert!((rows[0][2] - 10.0 * rows[0][1].log10()).abs() < 1e-5);

    let r = run(&["calibrate", "--amplitudes", "0.1"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("at least 2 points"));
}

#[test]
fn fit_round_trips_excitation_spectrum() {
    let dir = TempDir::new().unwrap();
    let r = run_in(
        dir.path(),
        &["spectrum", "excitation", "--analytic", "--output", "x.csv"],
        &[],
    );
    assert_eq!(r.code, 0);
    let r = run_in(
        dir.path(),
        &["fit", "--input", "x.csv", "--json", "fit.json"],
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(rel(field(&r.stdout, "quality_factor"), 44_000.0) < 1e-6);
    assert!(rel(field(&r.stdout, "center_hz"), 2e6) < 1e-9);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(json["result"]["converged"], true);
    assert!(
        rel(
            json["result"]["model"]["quality_factor"].as_f64().unwrap(),
            44_000.0
        ) < 1e-6
    );
}

#[test]
fn fit_recovers_q_from_synthetic_thermal_trace() {
    let dir = TempDir::new().unwrap();
    for weights in ["none", "chi2"] {
        run_in(
            dir.path(),
            &["spectrum", "thermal", "--seed", "3", "--output", "t.csv"],
            &[],
        );
        let r = run_in(
            dir.path(),
            &["fit", "--input", "t.csv", "--weights", weights],
            &[],
        );
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!(rel(field(&r.stdout, "quality_factor"), 44_000.0) < 0.05);
        assert!(field(&r.stdout, "quality_factor_sigma") > 0.0);
        assert!(rel(field(&r.stdout, "peak_db_re_shot_noise"), 43.47) < 0.01);
    }
}

#[test]
fn fit_input_errors() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("bad.csv"),
        "frequency_hz,normalized_power,displacement_psd_m2_per_hz\n1,2,3\n2,oops,3\n",
    )
    .unwrap();
    let r = run_in(dir.path(), &["fit", "--input", "bad.csv"], &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 3"), "{}", r.stderr);
    assert_eq!(
        run_in(dir.path(), &["fit", "--input", "absent.csv"], &[]).code,
        3
    );
    assert_eq!(
        run_in(
            dir.path(),
            &["fit", "--input", "bad.csv", "--model", "gaussian"],
            &[]
        )
        .code,
        1
    );
}
