//! Strain-referred noise budgets and quantum limits.
//!
//! Two noises limit the measurement: the photon-counting floor S_q (which
//! falls as the readout couples more strongly) and the backaction force
//! noise S_f (which grows in step, since their product is pinned at ħ²/4).
//! Referred to an equivalent strain of the cavity baseline, the two add as
//!
//! ```text
//! S_h = S_f/(mω²L)² + S_q·|G⁻¹(ω)|²/(mω²L)²
//! ```
//!
//! which, minimized over the coupling at fixed ω, can reach but never beat
//! the response-shaped bound ħ·|G⁻¹(ω)|/(mω²L)² ([`sprung_limit`]). For a
//! free mass |G⁻¹| = mω² and that bound becomes the familiar ħ/(mω²L²)
//! ([`sql`]); an optical spring reshapes |G⁻¹| and lets the budget dip below
//! the free-mass limit near resonance without touching the ħ²/4 product.
//! [`NoiseBudget::saturation_frequencies`] reports where the actual budget
//! comes close to its own sprung bound, i.e. where the fixed coupling
//! happens to be near-optimal.

use std::f64::consts::TAU;

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::fabry_perot::CavityDesign;
use crate::grid::FrequencyGrid;
use crate::measurement_map::KernelSet;

/// Ratio to the sprung limit below which a budget point counts as
/// saturating it.
pub const DEFAULT_SATURATION_THRESHOLD: f64 = 1.05;

/// One frequency of a strain budget (all PSDs two-sided).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetPoint {
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Backaction force noise S_f (N²·s).
    pub force_psd: f64,
    /// Backaction contribution to the strain budget (strain²·s).
    pub process_strain: f64,
    /// Photon-counting contribution to the strain budget (strain²·s).
    pub measurement_strain: f64,
    /// Total strain-referred noise (strain²·s).
    pub total_strain: f64,
    /// Best strain noise any coupling could reach given the mechanical
    /// response at this frequency (strain²·s).
    pub sprung_strain: f64,
    /// Free-mass quantum limit ħ/(mω²L²) (strain²·s).
    pub sql_strain: f64,
}

/// A strain budget evaluated over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBudget {
    grid: FrequencyGrid,
    force_psd: Vec<f64>,
    measurement_strain_psd: Vec<f64>,
    total_strain_psd: Vec<f64>,
    sprung_strain_psd: Vec<f64>,
    sql_strain_psd: Vec<f64>,
}

/// Root-mean-square equivalents of the budget curves over a one-second
/// integration.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsCurves {
    /// Total strain rms.
    pub total: Vec<f64>,
    /// Backaction (process) strain rms.
    pub process: Vec<f64>,
    /// Photon-counting (measurement) strain rms.
    pub measurement: Vec<f64>,
    /// Sprung-limit strain rms.
    pub sprung: Vec<f64>,
    /// Free-mass-limit strain rms.
    pub sql: Vec<f64>,
}

/// Static force and spring at one tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticPoint {
    /// Cavity tuning in half-widths.
    pub tuning: f64,
    /// Mean radiation-pressure force (N).
    pub force: f64,
    /// Static optical-spring constant (N/m).
    pub spring: f64,
}

impl NoiseBudget {
    /// Angular frequencies of the budget (rad/s).
    pub fn omegas(&self) -> &[f64] {
        self.grid.omegas()
    }

    /// Backaction force noise S_f per point (N²·s).
    pub fn force_psd(&self) -> &[f64] {
        &self.force_psd
    }

    /// Photon-counting strain contribution per point.
    pub fn measurement_strain_psd(&self) -> &[f64] {
        &self.measurement_strain_psd
    }

    /// Total strain-referred noise per point.
    pub fn total_strain_psd(&self) -> &[f64] {
        &self.total_strain_psd
    }

    /// Sprung quantum limit per point.
    pub fn sprung_strain_psd(&self) -> &[f64] {
        &self.sprung_strain_psd
    }

    /// Free-mass quantum limit per point.
    pub fn sql_strain_psd(&self) -> &[f64] {
        &self.sql_strain_psd
    }

    /// Backaction strain contribution per point, total minus measurement.
    pub fn process_strain_psd(&self) -> Vec<f64> {
        self.total_strain_psd
            .iter()
            .zip(&self.measurement_strain_psd)
            .map(|(total, measurement)| total - measurement)
            .collect()
    }

    /// All curves as one-second rms values.
    pub fn rms_strain(&self) -> RmsCurves {
        let rms = |values: &[f64]| values.iter().map(|&v| rms_value(v)).collect();
        RmsCurves {
            total: rms(&self.total_strain_psd),
            process: rms(&self.process_strain_psd()),
            measurement: rms(&self.measurement_strain_psd),
            sprung: rms(&self.sprung_strain_psd),
            sql: rms(&self.sql_strain_psd),
        }
    }

    /// Frequencies (Hz) where the total budget dips toward its sprung
    /// limit: strict local minima of total/sprung below `threshold`.
    pub fn saturation_frequencies(&self, threshold: f64) -> Vec<f64> {
        let freqs_hz: Vec<f64> = self.grid.iter().map(|omega| omega / TAU).collect();
        saturation_dips(
            &freqs_hz,
            &self.total_strain_psd,
            &self.sprung_strain_psd,
            threshold,
        )
    }
}

/// Evaluates all budget components at one frequency. Fails where the
/// measurement is blind or ω ≤ 0.
pub fn budget_point(kernels: &KernelSet, omega: f64) -> Result<BudgetPoint> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!(
            "strain budget needs omega > 0, got {omega}"
        )));
    }
    let design = kernels.design();
    let (sq, sf) = kernels.noise_psds(omega)?;
    let inverse_response = kernels.inverse_mechanical_response(omega).norm();
    let force_to_strain = design.mass * omega * omega * design.length;
    let referral = force_to_strain * force_to_strain;

    let process_strain = sf / referral;
    let measurement_strain = sq * inverse_response * inverse_response / referral;
    Ok(BudgetPoint {
        omega,
        force_psd: sf,
        process_strain,
        measurement_strain,
        total_strain: process_strain + measurement_strain,
        sprung_strain: HBAR * inverse_response / referral,
        sql_strain: HBAR / (design.mass * omega * omega * design.length * design.length),
    })
}

/// Evaluates the budget over a grid.
pub fn strain_budget(design: &CavityDesign, grid: &FrequencyGrid) -> Result<NoiseBudget> {
    let kernels = KernelSet::new(*design)?;
    let mut budget = NoiseBudget {
        grid: grid.clone(),
        force_psd: Vec::with_capacity(grid.len()),
        measurement_strain_psd: Vec::with_capacity(grid.len()),
        total_strain_psd: Vec::with_capacity(grid.len()),
        sprung_strain_psd: Vec::with_capacity(grid.len()),
        sql_strain_psd: Vec::with_capacity(grid.len()),
    };
    for omega in grid.iter() {
        let point = budget_point(&kernels, omega)?;
        budget.force_psd.push(point.force_psd);
        budget.measurement_strain_psd.push(point.measurement_strain);
        budget.total_strain_psd.push(point.total_strain);
        budget.sprung_strain_psd.push(point.sprung_strain);
        budget.sql_strain_psd.push(point.sql_strain);
    }
    Ok(budget)
}

/// Best possible strain noise at ω for the design's mechanical response,
/// ħ·|G⁻¹(ω)|/(mω²L)²: the value the budget reaches when the coupling is
/// optimal at this frequency. Fails on a response node (|G⁻¹| = 0), where
/// no finite coupling is optimal.
pub fn sprung_limit(design: &CavityDesign, omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!(
            "sprung limit needs omega > 0, got {omega}"
        )));
    }
    let kernels = KernelSet::new(*design)?;
    let inverse_response = kernels.inverse_mechanical_response(omega).norm();
    if inverse_response == 0.0 {
        return Err(Error::Domain(format!(
            "mechanical response diverges at omega = {omega}"
        )));
    }
    let force_to_strain = design.mass * omega * omega * design.length;
    Ok(HBAR * inverse_response / (force_to_strain * force_to_strain))
}

/// Free-mass standard quantum limit ħ/(mω²L²) as a two-sided strain PSD.
pub fn sql(design: &CavityDesign, omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!(
            "quantum limit needs omega > 0, got {omega}"
        )));
    }
    design.validate()?;
    Ok(HBAR / (design.mass * omega * omega * design.length * design.length))
}

/// Static force and spring across a sweep of tunings (in half-widths).
pub fn static_curves(design: &CavityDesign, tunings: &[f64]) -> Result<Vec<StaticPoint>> {
    tunings
        .iter()
        .map(|&tuning| {
            let kernels = KernelSet::new(design.with_tuning(tuning))?;
            Ok(StaticPoint {
                tuning,
                force: kernels.static_force(),
                spring: kernels.static_spring(),
            })
        })
        .collect()
}

/// One-second rms equivalent of a two-sided PSD value, √(2·S).
pub fn rms_value(psd: f64) -> f64 {
    (2.0 * psd).sqrt()
}

/// Frequencies (Hz) of strict local minima of total/reference below
/// `threshold`. All slices must share a length.
pub fn saturation_dips(
    freqs_hz: &[f64],
    total: &[f64],
    reference: &[f64],
    threshold: f64,
) -> Vec<f64> {
    assert_eq!(freqs_hz.len(), total.len());
    assert_eq!(freqs_hz.len(), reference.len());
    let ratio: Vec<f64> = total.iter().zip(reference).map(|(t, r)| t / r).collect();
    let mut dips = Vec::new();
    for i in 1..ratio.len().saturating_sub(1) {
        if ratio[i] < ratio[i - 1] && ratio[i] < ratio[i + 1] && ratio[i] < threshold {
            dips.push(freqs_hz[i]);
        }
    }
    dips
}
