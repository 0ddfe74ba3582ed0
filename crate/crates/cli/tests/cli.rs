//! End-to-end tests of the `optomech` binary: artifact layout, CSV
//! contents, exit codes, and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn optomech(args: &[&str]) -> Command {
    let mut command = Command::new(env!("CARGO_BIN_EXE_optomech"));
    command.args(args);
    command
}

fn run(args: &[&str]) -> Output {
    optomech(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// Parses a CSV body into numeric cells; empty and textual cells become
/// NaN, booleans become 0/1.
fn parse_rows(csv: &str, expected_header: &str) -> Vec<Vec<f64>> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(expected_header));
    lines
        .map(|line| {
            line.split(',')
                .map(|cell| match cell {
                    "true" => 1.0,
                    "false" => 0.0,
                    other => other.parse::<f64>().unwrap_or(f64::NAN),
                })
                .collect()
        })
        .collect()
}

#[test]
fn statics_writes_the_expected_table() {
    let dir = tempdir().unwrap();
    let out = run(&[
        "statics",
        "--out",
        dir.path().to_str().unwrap(),
        "--plot-script",
    ]);
    assert!(out.status.success(), "{out:?}");

    let rows = parse_rows(
        &read(dir.path(), "statics.csv"),
        "phi_over_phiF,force_N,spring_N_per_m",
    );
    assert_eq!(rows.len(), 241);
    let resonant = rows
        .iter()
        .find(|row| row[0].abs() < 1e-12)
        .expect("grid contains tuning zero");
    assert!((resonant[1] / 5.518659e-3 - 1.0).abs() < 1e-4);
    assert!(resonant[2].abs() < 1e-3 * 1e8);

    let peak_spring = rows.iter().map(|row| row[2].abs()).fold(0.0, f64::max);
    assert!(
        (0.8e8..=1.2e8).contains(&peak_spring),
        "peak spring {peak_spring:.3e}"
    );

    let script = read(dir.path(), "statics.gp");
    assert!(script.contains("set datafile separator ','"));
}

#[test]
fn statics_with_an_empty_list_writes_only_the_header() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "[statics]\ntunings = []\n").unwrap();
    let out = run(&[
        "statics",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(
        read(dir.path(), "statics.csv"),
        "phi_over_phiF,force_N,spring_N_per_m\n"
    );
}

#[test]
fn poles_reports_the_reference_sweep() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "[poles]\ntunings = [5.0, 10.0]\n").unwrap();
    let out = run(&[
        "poles",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    let rows = parse_rows(
        &read(dir.path(), "poles.csv"),
        "phi_over_phiF,pole_re,pole_im,freq_Hz,Q,stable,error",
    );
    assert_eq!(rows.len(), 8, "two tunings, four poles each");
    assert!(rows.iter().any(|row| row[0] == 10.0
        && row[5] == 0.0
        && (row[3] / 15.9 - 1.0).abs() < 0.10
        && (row[4] / -2.59 - 1.0).abs() < 0.15));
    assert!(rows.iter().any(|row| row[0] == 10.0
        && row[5] == 1.0
        && (row[3] / 21.2 - 1.0).abs() < 0.10
        && (row[4] / 1.90 - 1.0).abs() < 0.15));

    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "poles_summary.json")).unwrap();
    assert_eq!(summary["tunings"], 2);
    assert_eq!(summary["succeeded"], 2);
    assert_eq!(summary["all_tunings_unstable"], true);
    let strongest = summary["strongest_instability_tuning"].as_f64().unwrap();
    assert!(strongest == 5.0 || strongest == 10.0);
}

#[test]
fn poles_with_a_single_tuning_emits_one_model() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "[poles]\ntunings = [10.0]\n").unwrap();
    let out = run(&[
        "poles",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    let rows = parse_rows(
        &read(dir.path(), "poles.csv"),
        "phi_over_phiF,pole_re,pole_im,freq_Hz,Q,stable,error",
    );
    assert_eq!(rows.len(), 4, "one tuning, one four-pole model");
    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "poles_summary.json")).unwrap();
    assert_eq!(summary["tunings"], 1);
    assert_eq!(summary["succeeded"], 1);
}

#[test]
fn bode_table_is_finite_and_unwrapped() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[bode]\nf_min_hz = 1.0\nf_max_hz = 200.0\npoints = 100\n",
    )
    .unwrap();
    let out = run(&[
        "bode",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    let rows = parse_rows(
        &read(dir.path(), "bode.csv"),
        "freq_Hz,mag_dB_re_1uW_per_N,phase_deg",
    );
    assert_eq!(rows.len(), 100);
    for pair in rows.windows(2) {
        assert!(pair.iter().all(|row| row.iter().all(|v| v.is_finite())));
        assert!(
            (pair[1][2] - pair[0][2]).abs() <= 180.0,
            "phase jump between {pair:?}"
        );
    }

    let in_band = rows
        .iter()
        .filter(|row| (10.0..=30.0).contains(&row[0]))
        .map(|row| row[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let at_100 = rows
        .iter()
        .min_by(|a, b| (a[0] - 100.0).abs().total_cmp(&(b[0] - 100.0).abs()))
        .unwrap()[1];
    assert!(
        in_band > at_100 + 20.0,
        "in-band peak {in_band:.1} dB vs {at_100:.1} dB at 100 Hz"
    );
}

#[test]
fn noise_summary_locates_the_saturated_dips() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[noise]\nf_min_hz = 5.0\nf_max_hz = 50.0\npoints = 200\n",
    )
    .unwrap();
    let out = run(&[
        "noise",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    let rows = parse_rows(
        &read(dir.path(), "noise.csv"),
        "freq_Hz,rms_h_tot,rms_process,rms_measurement,rms_sprung,rms_SQL",
    );
    assert_eq!(rows.len(), 200);
    for row in &rows {
        assert!(
            row[1] >= row[4],
            "total below sprung limit at {} Hz",
            row[0]
        );
    }
    assert!(
        rows.iter()
            .any(|row| (10.0..=30.0).contains(&row[0]) && row[1] < row[5]),
        "total never beats the free-mass limit in band"
    );

    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "noise_summary.json")).unwrap();
    let dips: Vec<f64> = summary["saturation_frequencies_hz"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(dips.len(), 2, "{dips:?}");
    assert!((13.0..=17.0).contains(&dips[0]), "{dips:?}");
    assert!((22.0..=28.0).contains(&dips[1]), "{dips:?}");
}

#[test]
fn simulate_is_reproducible_for_a_fixed_seed() {
    let first = tempdir().unwrap();
    let second = tempdir().unwrap();
    let config = first.path().join("run.toml");
    fs::write(
        &config,
        "[simulate]\nrealizations = 500\npoints = 6\nf_min_hz = 10.0\nf_max_hz = 30.0\n",
    )
    .unwrap();
    for dir in [&first, &second] {
        let out = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
    }
    let table = read(first.path(), "simulate.csv");
    assert_eq!(table, read(second.path(), "simulate.csv"));

    let rows = parse_rows(&table, "freq_Hz,Sy_analytic,Sy_sim,stderr,z_score");
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert!(row[4].abs() < 6.0, "implausible z score in {row:?}");
    }
}

#[test]
fn simulate_warns_about_insufficient_realizations() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[simulate]\nrealizations = 2\npoints = 4\nf_min_hz = 10.0\nf_max_hz = 30.0\n",
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("insufficient realizations"),
        "stderr was {stderr:?}"
    );
    assert!(
        matches!(out.status.code(), Some(0) | Some(3)),
        "unexpected exit {out:?}"
    );
    assert!(dir.path().join("simulate.csv").exists());
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[simulate]\nrealizations = 200\npoints = 3\nf_min_hz = 10.0\nf_max_hz = 30.0\n",
    )
    .unwrap();
    let mut tables = Vec::new();
    for seed in ["1", "2"] {
        let out = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(out.status.success(), "{out:?}");
        tables.push(read(dir.path(), "simulate.csv"));
    }
    assert_ne!(tables[0], tables[1]);
}

#[test]
fn design_overrides_rescale_the_outputs() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[design]\ndetected_power = 90.0\n\n[statics]\ntunings = [0.0]\n",
    )
    .unwrap();
    let out = run(&[
        "statics",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let rows = parse_rows(
        &read(dir.path(), "statics.csv"),
        "phi_over_phiF,force_N,spring_N_per_m",
    );
    assert_eq!(rows.len(), 1);
    assert!(
        (rows[0][1] / (0.5 * 5.518659e-3) - 1.0).abs() < 1e-4,
        "half the detected power must halve the static force, got {:?}",
        rows[0]
    );
}

#[test]
fn invalid_design_values_exit_with_code_one() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "[design]\npower_reflectivity = 1.5\n").unwrap();
    let out = run(&[
        "statics",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempdir().unwrap();
    let out = optomech(&["statics"])
        .env("OPTOMECH_OUT", dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{out:?}");
    assert!(dir.path().join("statics.csv").exists());
}

#[test]
fn dump_config_reflects_overrides_and_round_trips() {
    let out = run(&["simulate", "--dump-config", "--seed", "777"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    let value: toml::Value = toml::from_str(&text).expect("dump parses as TOML");
    assert_eq!(value["simulate"]["seed"].as_integer(), Some(777));
    assert_eq!(value["design"]["mass"].as_float(), Some(40.0));

    let dir = tempdir().unwrap();
    let config = dir.path().join("dumped.toml");
    fs::write(&config, &text).unwrap();
    let again = run(&[
        "simulate",
        "--dump-config",
        "--config",
        config.to_str().unwrap(),
    ]);
    assert!(again.status.success(), "{again:?}");
    assert_eq!(text, String::from_utf8(again.stdout).unwrap());
}

#[test]
fn usage_and_config_errors_exit_with_code_one() {
    let dir = tempdir().unwrap();
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    let config = dir.path().join("bad.toml");
    fs::write(&config, "[noise]\nbogus_key = 1\n").unwrap();
    let out = run(&[
        "noise",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["noise", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_grid_values_exit_with_code_one() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "[bode]\nf_min_hz = 100.0\nf_max_hz = 1.0\n").unwrap();
    let out = run(&[
        "bode",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
