//! Closed-loop dynamics: transfer-function sampling, rational fits, and
//! stability classification.
//!
//! The loop closed only through the measurement backaction maps external
//! force to detected output power. [`transfer_function`] evaluates that map
//! in closed form on the real-frequency axis; [`fit_rational`] condenses
//! sampled values into a finite pole-zero model whose poles continue the
//! response off the axis, so their half-plane decides stability: a pole at
//! s with Re s > 0 grows as e^{Re s·t}. [`pole_trajectories`] repeats the
//! fit across a sweep of cavity tunings and [`mechanical_resonance`] locates
//! the frequency where the spring-loaded mechanical response diverges.

mod rational_fit;

pub use rational_fit::{fit_rational, fit_rational_with, FitOptions, PoleReport, PoleZeroModel};

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::fabry_perot::CavityDesign;
use crate::grid::FrequencyGrid;
use crate::loop_model::DEFAULT_SINGULAR_EPS;
use crate::measurement_map::KernelSet;

/// A complex frequency response sampled on a positive frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexResponse {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl ComplexResponse {
    /// Wraps samples after checking that the grid validates and that every
    /// value is finite and matches the grid in length.
    pub fn new(omegas: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        let grid = FrequencyGrid::new(omegas)?;
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} grid points but {} samples",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values
            .iter()
            .find(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::NonFinite(format!("sample value {bad}")));
        }
        Ok(Self { grid, values })
    }

    /// Sample angular frequencies (rad/s).
    pub fn omegas(&self) -> &[f64] {
        self.grid.omegas()
    }

    /// Sampled response values.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the response holds no samples.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Force-to-power transfer function of the backaction-closed loop (W/N):
/// ħkc·ξG/(1 + ξGΓ′). Fails with [`Error::SingularLoop`] where the
/// denominator cancels.
pub fn transfer_function(kernels: &KernelSet, omega: f64) -> Result<Complex64> {
    let design = kernels.design();
    let forward = kernels.measurement(omega) * kernels.mechanical_response(omega);
    let open_loop = forward * kernels.backaction(omega);
    let denominator = Complex64::new(1.0, 0.0) + open_loop;
    if denominator.norm() <= DEFAULT_SINGULAR_EPS * open_loop.norm() {
        return Err(Error::SingularLoop { omega });
    }
    Ok(HBAR * design.wavenumber() * SPEED_OF_LIGHT * forward / denominator)
}

/// Samples [`transfer_function`] on a grid.
pub fn sample_transfer_function(
    kernels: &KernelSet,
    grid: &FrequencyGrid,
) -> Result<ComplexResponse> {
    let values = grid
        .iter()
        .map(|omega| transfer_function(kernels, omega))
        .collect::<Result<Vec<_>>>()?;
    ComplexResponse::new(grid.omegas().to_vec(), values)
}

/// Outcome of fitting one tuning in a sweep.
#[derive(Debug, Clone)]
pub struct TuningFit {
    /// Cavity tuning in half-widths.
    pub tuning: f64,
    /// The fitted model, or why the fit failed.
    pub model: Result<PoleZeroModel>,
}

/// Fits a pole-zero model of the force-to-power transfer function at each
/// tuning. The sample grid adapts per tuning: it spans a factor of 20 both
/// ways around the static-spring corner frequency √(|k|/m)/2π (floored at
/// 0.05 Hz), so the resonant structure stays inside the fit window as the
/// spring stiffens with tuning.
pub fn pole_trajectories(
    design: &CavityDesign,
    tunings: &[f64],
    num_zeros: usize,
    num_poles: usize,
    options: &FitOptions,
) -> Vec<TuningFit> {
    tunings
        .iter()
        .map(|&tuning| TuningFit {
            tuning,
            model: fit_one_tuning(design, tuning, num_zeros, num_poles, options),
        })
        .collect()
}

fn fit_one_tuning(
    design: &CavityDesign,
    tuning: f64,
    num_zeros: usize,
    num_poles: usize,
    options: &FitOptions,
) -> Result<PoleZeroModel> {
    let kernels = KernelSet::new(design.with_tuning(tuning))?;
    let corner_hz = (kernels.static_spring().abs() / design.mass).sqrt() / TAU;
    let corner_hz = corner_hz.max(0.05);
    let grid = FrequencyGrid::log_spaced_hz(corner_hz / 20.0, corner_hz * 20.0, 400)?;
    let samples = sample_transfer_function(&kernels, &grid)?;
    fit_rational_with(&samples, num_zeros, num_poles, options)
}

/// Angular frequency (rad/s) at which the inverse mechanical response
/// m(ω₀² − ω²) + ψ(ω) crosses zero: the optical-spring resonance. Scans
/// 2000 points up to 2π·10⁴ rad/s (seeded just above ω = 0 so corners below
/// the first scan point still bracket) and bisects the first sign change.
/// Fails with [`Error::NoResonanceBracket`] when no crossing exists, e.g.
/// for a cavity tuned short where the spring is negative at all
/// frequencies.
pub fn mechanical_resonance(design: &CavityDesign) -> Result<f64> {
    let kernels = KernelSet::new(*design)?;
    let stiffness = |omega: f64| kernels.inverse_mechanical_response(omega).re;

    let omega_max = TAU * 1e4;
    let points = 2000;
    let mut lo = 1e-9 * omega_max;
    let mut lo_value = stiffness(lo);
    for i in 1..=points {
        let hi = omega_max * i as f64 / points as f64;
        let hi_value = stiffness(hi);
        if lo_value == 0.0 {
            return Ok(lo);
        }
        if lo_value.signum() != hi_value.signum() {
            let (mut a, mut b) = (lo, hi);
            let mut a_value = lo_value;
            while b - a > 1e-10 * b {
                let mid = 0.5 * (a + b);
                let mid_value = stiffness(mid);
                if mid_value == 0.0 {
                    return Ok(mid);
                }
                if a_value.signum() == mid_value.signum() {
                    a = mid;
                    a_value = mid_value;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        lo = hi;
        lo_value = hi_value;
    }
    Err(Error::NoResonanceBracket { omega_max })
}

/// Largest normalized growth rate max over poles of Re s/|s|, the inverse
/// quality of the most unstable pole. Positive values flag instability;
/// `None` when the model has no pole away from the origin.
pub fn instability_strength(model: &PoleZeroModel) -> Option<f64> {
    model
        .poles
        .iter()
        .filter(|pole| pole.norm() > 0.0)
        .map(|pole| pole.re / pole.norm())
        .fold(None, |best, rate| match best {
            None => Some(rate),
            Some(b) => Some(b.max(rate)),
        })
}
