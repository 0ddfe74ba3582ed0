//! The five analysis commands, each writing CSV (and optional gnuplot
//! companion) files into the chosen output directory.

use std::f64::consts::TAU;
use std::path::Path;

use serde::Serialize;

use optomech::dynamics_analysis::{
    instability_strength, pole_trajectories, transfer_function, FitOptions,
};
use optomech::loop_simulator::{simulate_psd, SimConfig};
use optomech::noise_budget::{budget_point, rms_value, saturation_dips, static_curves};
use optomech::{CavityDesign, Error, FrequencyGrid, KernelSet};

use crate::config::{
    AppConfig, BodeConfig, NoiseConfig, PolesConfig, SimulateConfig, StaticsConfig,
};
use crate::output;
use crate::CliError;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    output::write_atomic(dir, name, contents)
        .map(|_| ())
        .map_err(|e| CliError::Analysis(format!("cannot write {name}: {e}")))
}

fn grid_from(f_min_hz: f64, f_max_hz: f64, points: usize) -> Result<FrequencyGrid, CliError> {
    FrequencyGrid::log_spaced_hz(f_min_hz, f_max_hz, points)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn kernels_for(design: &CavityDesign) -> Result<KernelSet, CliError> {
    KernelSet::new(*design).map_err(|e| CliError::Config(e.to_string()))
}

/// Escapes a free-text cell for embedding in a comma-separated row.
fn csv_quote(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

pub fn statics(
    design: &CavityDesign,
    config: &StaticsConfig,
    out_dir: &Path,
    plot: bool,
) -> Result<u8, CliError> {
    let tunings = config.tuning_grid().map_err(CliError::Config)?;
    let curves = static_curves(design, &tunings)
        .map_err(|e| CliError::Analysis(format!("static scan failed: {e}")))?;
    let rows: Vec<Vec<f64>> = curves
        .iter()
        .map(|point| vec![point.tuning, point.force, point.spring])
        .collect();
    let csv = output::format_csv("phi_over_phiF,force_N,spring_N_per_m", &rows);
    write(out_dir, "statics.csv", &csv)?;
    if plot {
        write(out_dir, "statics.gp", output::statics_plot())?;
    }
    println!("statics: wrote {} tunings to statics.csv", rows.len());
    Ok(0)
}

#[derive(Serialize)]
struct PolesSummary {
    tunings: usize,
    succeeded: usize,
    failed: usize,
    all_tunings_unstable: bool,
    strongest_instability_tuning: Option<f64>,
    failures: Vec<PoleFailure>,
}

#[derive(Serialize)]
struct PoleFailure {
    tuning: f64,
    error: String,
}

pub fn poles(
    design: &CavityDesign,
    config: &PolesConfig,
    out_dir: &Path,
    plot: bool,
) -> Result<u8, CliError> {
    let tunings = config.tuning_grid().map_err(CliError::Config)?;
    let options = FitOptions {
        residual_bound: config.residual_bound,
        ..FitOptions::default()
    };
    let fits = pole_trajectories(
        design,
        &tunings,
        config.num_zeros,
        config.num_poles,
        &options,
    );

    let mut csv = String::from("phi_over_phiF,pole_re,pole_im,freq_Hz,Q,stable,error\n");
    let mut summary = PolesSummary {
        tunings: fits.len(),
        succeeded: 0,
        failed: 0,
        all_tunings_unstable: true,
        strongest_instability_tuning: None,
        failures: Vec::new(),
    };
    let mut strongest = f64::NEG_INFINITY;
    for fit in &fits {
        match &fit.model {
            Ok(model) => {
                summary.succeeded += 1;
                summary.all_tunings_unstable &= model.has_unstable_pole();
                if let Some(strength) = instability_strength(model) {
                    if strength > strongest {
                        strongest = strength;
                        summary.strongest_instability_tuning = Some(fit.tuning);
                    }
                }
                for pole in &model.poles {
                    let quality = if pole.re == 0.0 {
                        f64::INFINITY
                    } else {
                        -pole.norm() / (2.0 * pole.re)
                    };
                    csv.push_str(&format!(
                        "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{},\n",
                        fit.tuning,
                        pole.re,
                        pole.im,
                        pole.norm() / TAU,
                        quality,
                        pole.re < 0.0
                    ));
                }
            }
            Err(error) => {
                summary.failed += 1;
                summary.all_tunings_unstable = false;
                csv.push_str(&format!(
                    "{:.8e},,,,,,{}\n",
                    fit.tuning,
                    csv_quote(&error.to_string())
                ));
                summary.failures.push(PoleFailure {
                    tuning: fit.tuning,
                    error: error.to_string(),
                });
            }
        }
    }
    write(out_dir, "poles.csv", &csv)?;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Analysis(format!("cannot serialize summary: {e}")))?;
    write(out_dir, "poles_summary.json", &json)?;
    if plot {
        write(out_dir, "poles.gp", output::poles_plot())?;
    }
    println!(
        "poles: {} of {} tunings fitted, summary in poles_summary.json",
        summary.succeeded, summary.tunings
    );
    if summary.succeeded * 5 < summary.tunings * 4 {
        return Err(CliError::Analysis(format!(
            "only {} of {} tunings produced an acceptable fit",
            summary.succeeded, summary.tunings
        )));
    }
    Ok(0)
}

pub fn bode(
    design: &CavityDesign,
    config: &BodeConfig,
    out_dir: &Path,
    plot: bool,
) -> Result<u8, CliError> {
    let grid = grid_from(config.f_min_hz, config.f_max_hz, config.points)?;
    let kernels = kernels_for(design)?;

    let mut csv = String::from("freq_Hz,mag_dB_re_1uW_per_N,phase_deg\n");
    let mut previous_degrees: Option<f64> = None;
    let mut written = 0usize;
    for omega in grid.iter() {
        match transfer_function(&kernels, omega) {
            Ok(value) => {
                let magnitude_db = 20.0 * (value.norm() / 1e-6).log10();
                let mut degrees = value.arg().to_degrees();
                if let Some(previous) = previous_degrees {
                    while degrees - previous > 180.0 {
                        degrees -= 360.0;
                    }
                    while degrees - previous < -180.0 {
                        degrees += 360.0;
                    }
                }
                previous_degrees = Some(degrees);
                csv.push_str(&format!(
                    "{:.8e},{magnitude_db:.8e},{degrees:.8e}\n",
                    omega / TAU
                ));
                written += 1;
            }
            Err(error @ Error::SingularLoop { .. }) => {
                eprintln!(
                    "bode: warning: {:.3} Hz skipped, {error}; emitting blank cells",
                    omega / TAU
                );
                csv.push_str(&format!("{:.8e},,\n", omega / TAU));
            }
            Err(error) => {
                return Err(CliError::Analysis(format!(
                    "transfer function failed: {error}"
                )))
            }
        }
    }
    write(out_dir, "bode.csv", &csv)?;
    if plot {
        write(out_dir, "bode.gp", output::bode_plot())?;
    }
    println!("bode: wrote {written} frequencies to bode.csv");
    Ok(0)
}

#[derive(Serialize)]
struct NoiseSummary {
    saturation_frequencies_hz: Vec<f64>,
}

pub fn noise(
    design: &CavityDesign,
    config: &NoiseConfig,
    out_dir: &Path,
    plot: bool,
) -> Result<u8, CliError> {
    let grid = grid_from(config.f_min_hz, config.f_max_hz, config.points)?;
    let kernels = kernels_for(design)?;

    let mut csv =
        String::from("freq_Hz,rms_h_tot,rms_process,rms_measurement,rms_sprung,rms_SQL\n");
    let mut freqs_hz = Vec::with_capacity(grid.len());
    let mut totals = Vec::with_capacity(grid.len());
    let mut sprungs = Vec::with_capacity(grid.len());
    for omega in grid.iter() {
        match budget_point(&kernels, omega) {
            Ok(point) => {
                csv.push_str(&format!(
                    "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                    omega / TAU,
                    rms_value(point.total_strain),
                    rms_value(point.process_strain),
                    rms_value(point.measurement_strain),
                    rms_value(point.sprung_strain),
                    rms_value(point.sql_strain),
                ));
                freqs_hz.push(omega / TAU);
                totals.push(point.total_strain);
                sprungs.push(point.sprung_strain);
            }
            Err(error @ Error::MeasurementBlind { .. }) => {
                eprintln!(
                    "noise: warning: {:.3} Hz skipped, {error}; emitting blank cells",
                    omega / TAU
                );
                csv.push_str(&format!("{:.8e},,,,,\n", omega / TAU));
            }
            Err(error) => return Err(CliError::Analysis(format!("strain budget failed: {error}"))),
        }
    }
    write(out_dir, "noise.csv", &csv)?;
    let summary = NoiseSummary {
        saturation_frequencies_hz: saturation_dips(
            &freqs_hz,
            &totals,
            &sprungs,
            config.saturation_threshold,
        ),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Analysis(format!("cannot serialize summary: {e}")))?;
    write(out_dir, "noise_summary.json", &json)?;
    if plot {
        write(out_dir, "noise.gp", output::noise_plot())?;
    }
    println!(
        "noise: wrote {} frequencies to noise.csv, {} saturated dips",
        freqs_hz.len(),
        summary.saturation_frequencies_hz.len()
    );
    Ok(0)
}

pub fn simulate(
    design: &CavityDesign,
    config: &SimulateConfig,
    seed_override: Option<u64>,
    out_dir: &Path,
    plot: bool,
) -> Result<u8, CliError> {
    let controller = config.controller.build().map_err(CliError::Config)?;
    let grid = grid_from(config.f_min_hz, config.f_max_hz, config.points)?;
    let kernels = kernels_for(design)?;
    let loop_kernels = kernels.loop_kernels(&controller);
    let sim_config = SimConfig {
        seed: seed_override.unwrap_or(config.seed),
        realizations: config.realizations,
        grid,
        controller,
    };
    if sim_config.realizations < 100 {
        eprintln!(
            "simulate: warning: insufficient realizations ({}) for reliable statistics",
            sim_config.realizations
        );
    }
    let estimates = simulate_psd(&loop_kernels, &sim_config)
        .map_err(|e| CliError::Analysis(format!("simulation failed: {e}")))?;

    let mut rows = Vec::with_capacity(estimates.len());
    let mut outliers = 0usize;
    let mut low_confidence = 0usize;
    for estimate in &estimates {
        let analytic = loop_kernels
            .closed_loop_psd(estimate.omega)
            .map_err(|e| CliError::Analysis(format!("analytic PSD failed: {e}")))?;
        let z = (estimate.psd - analytic) / estimate.std_error;
        if z.abs() > 4.0 {
            outliers += 1;
        }
        if estimate.low_confidence {
            low_confidence += 1;
        }
        rows.push(vec![
            estimate.omega / TAU,
            analytic,
            estimate.psd,
            estimate.std_error,
            z,
        ]);
    }
    if low_confidence > 0 {
        eprintln!(
            "simulate: warning: {low_confidence} of {} estimates have low confidence",
            rows.len()
        );
    }
    let csv = output::format_csv("freq_Hz,Sy_analytic,Sy_sim,stderr,z_score", &rows);
    write(out_dir, "simulate.csv", &csv)?;
    if plot {
        write(out_dir, "simulate.gp", output::simulate_plot())?;
    }
    println!(
        "simulate: {} realizations per point, {} of {} points beyond |z| = 4",
        sim_config.realizations,
        outliers,
        rows.len()
    );
    if outliers * 20 > rows.len() {
        eprintln!("simulate: statistical gate failed, more than 5% of points beyond |z| = 4");
        return Ok(3);
    }
    Ok(0)
}

pub fn dispatch(
    command: &crate::Command,
    config: &AppConfig,
    seed_override: Option<u64>,
    out_dir: &Path,
    plot: bool,
) -> Result<u8, CliError> {
    let design = config.design.build().map_err(CliError::Config)?;
    match command {
        crate::Command::Statics => statics(&design, &config.statics, out_dir, plot),
        crate::Command::Poles => poles(&design, &config.poles, out_dir, plot),
        crate::Command::Bode => bode(&design, &config.bode, out_dir, plot),
        crate::Command::Noise => noise(&design, &config.noise, out_dir, plot),
        crate::Command::Simulate => {
            simulate(&design, &config.simulate, seed_override, out_dir, plot)
        }
    }
}
