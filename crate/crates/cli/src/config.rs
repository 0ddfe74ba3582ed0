//! TOML-backed run configuration with per-command sections.
//!
//! Every field has a default, so an empty (or absent) file reproduces the
//! built-in reference runs; unknown keys are rejected to catch typos.

use serde::{Deserialize, Serialize};

use optomech::{CavityDesign, Controller};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub design: DesignConfig,
    pub statics: StaticsConfig,
    pub poles: PolesConfig,
    pub bode: BodeConfig,
    pub noise: NoiseConfig,
    pub simulate: SimulateConfig,
}

/// Instrument parameters, keyed exactly like the [`CavityDesign`] fields.
/// Every field defaults to the reference preset, so a partial `[design]`
/// table overrides only the named parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub length: f64,
    pub wavelength: f64,
    pub mass: f64,
    pub detected_power: f64,
    pub power_reflectivity: f64,
    pub tuning: f64,
    pub squeezing: f64,
    pub mechanical_omega0: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        let reference = CavityDesign::reference();
        Self {
            length: reference.length,
            wavelength: reference.wavelength,
            mass: reference.mass,
            detected_power: reference.detected_power,
            power_reflectivity: reference.power_reflectivity,
            tuning: reference.tuning,
            squeezing: reference.squeezing,
            mechanical_omega0: reference.mechanical_omega0,
        }
    }
}

impl DesignConfig {
    pub fn build(&self) -> Result<CavityDesign, String> {
        let design = CavityDesign {
            length: self.length,
            wavelength: self.wavelength,
            mass: self.mass,
            detected_power: self.detected_power,
            power_reflectivity: self.power_reflectivity,
            tuning: self.tuning,
            squeezing: self.squeezing,
            mechanical_omega0: self.mechanical_omega0,
        };
        design.validate().map_err(|e| e.to_string())?;
        Ok(design)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticsConfig {
    /// Lower edge of the tuning scan, in cavity half-widths.
    pub tuning_min: f64,
    /// Upper edge of the tuning scan, in cavity half-widths.
    pub tuning_max: f64,
    /// Number of evenly spaced scan points.
    pub points: usize,
    /// Explicit tuning list; overrides the range when present.
    pub tunings: Option<Vec<f64>>,
}

impl Default for StaticsConfig {
    fn default() -> Self {
        Self {
            tuning_min: -3.0,
            tuning_max: 3.0,
            points: 241,
            tunings: None,
        }
    }
}

impl StaticsConfig {
    /// Scan grid: an explicit list (possibly empty, producing a header-only
    /// table) or the configured linear range.
    pub fn tuning_grid(&self) -> Result<Vec<f64>, String> {
        if let Some(tunings) = &self.tunings {
            return Ok(tunings.clone());
        }
        if self.points < 2 {
            return Err("statics.points must be at least 2".into());
        }
        if !(self.tuning_min.is_finite()
            && self.tuning_max.is_finite()
            && self.tuning_min < self.tuning_max)
        {
            return Err("statics.tuning_min must lie below statics.tuning_max".into());
        }
        let step = (self.tuning_max - self.tuning_min) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| self.tuning_min + step * i as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolesConfig {
    /// Explicit tuning list; overrides the logarithmic sweep when present.
    pub tunings: Option<Vec<f64>>,
    /// Lower edge of the logarithmic tuning sweep, in half-widths.
    pub tuning_min: f64,
    /// Upper edge of the logarithmic tuning sweep, in half-widths.
    pub tuning_max: f64,
    /// Number of sweep points.
    pub points: usize,
    /// Number of zeros of the fitted rational model.
    pub num_zeros: usize,
    /// Number of poles of the fitted rational model.
    pub num_poles: usize,
    /// Largest acceptable peak-normalized fit residual.
    pub residual_bound: f64,
}

impl Default for PolesConfig {
    fn default() -> Self {
        Self {
            tunings: None,
            tuning_min: 0.01,
            tuning_max: 100.0,
            points: 30,
            num_zeros: 1,
            num_poles: 4,
            residual_bound: 0.05,
        }
    }
}

impl PolesConfig {
    /// Sweep grid: logarithmic between the edges, with the nearest grid
    /// points snapped onto the decade markers they approximate so the output
    /// always contains exactly representable reference tunings.
    pub fn tuning_grid(&self) -> Result<Vec<f64>, String> {
        if let Some(tunings) = &self.tunings {
            if tunings.is_empty() {
                return Err("poles.tunings must not be empty".into());
            }
            if tunings.iter().any(|t| *t <= 0.0 || !t.is_finite()) {
                return Err("poles.tunings must be positive and finite".into());
            }
            return Ok(tunings.clone());
        }
        if self.points < 2 {
            return Err("poles.points must be at least 2".into());
        }
        if !(self.tuning_min > 0.0 && self.tuning_min < self.tuning_max) {
            return Err("poles sweep edges must satisfy 0 < tuning_min < tuning_max".into());
        }
        let log_min = self.tuning_min.log10();
        let log_max = self.tuning_max.log10();
        let step = (log_max - log_min) / (self.points - 1) as f64;
        let mut grid: Vec<f64> = (0..self.points)
            .map(|i| 10f64.powf(log_min + step * i as f64))
            .collect();
        for marker in [0.01, 0.1, 1.0, 10.0, 100.0] {
            if marker < self.tuning_min || marker > self.tuning_max {
                continue;
            }
            if let Some(nearest) = (0..grid.len()).min_by(|&a, &b| {
                (grid[a] / marker)
                    .ln()
                    .abs()
                    .total_cmp(&(grid[b] / marker).ln().abs())
            }) {
                grid[nearest] = marker;
            }
        }
        grid.dedup();
        Ok(grid)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodeConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
}

impl Default for BodeConfig {
    fn default() -> Self {
        Self {
            f_min_hz: 0.5,
            f_max_hz: 500.0,
            points: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
    /// Total-to-sprung ratio below which a grid point counts as saturated.
    pub saturation_threshold: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            f_min_hz: 1.0,
            f_max_hz: 1000.0,
            points: 600,
            saturation_threshold: 1.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub realizations: usize,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
    pub controller: ControllerConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            realizations: 10_000,
            f_min_hz: 5.0,
            f_max_hz: 100.0,
            points: 40,
            controller: ControllerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// One of `zero`, `velocity`, or `lead`.
    pub kind: String,
    pub gain: f64,
    pub corner_hz: f64,
    /// Damping ratio, used by the `lead` kind only.
    pub damping: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kind: "velocity".into(),
            gain: 1e-26,
            corner_hz: 200.0,
            damping: 0.7,
        }
    }
}

impl ControllerConfig {
    pub fn build(&self) -> Result<Controller, String> {
        match self.kind.as_str() {
            "zero" => Ok(Controller::Zero),
            "velocity" => Ok(Controller::VelocityFeedback {
                gain: self.gain,
                corner: TAU * self.corner_hz,
            }),
            "lead" => Ok(Controller::SecondOrderLead {
                gain: self.gain,
                corner: TAU * self.corner_hz,
                damping: self.damping,
            }),
            other => Err(format!(
                "unknown controller kind {other:?}; expected zero, velocity, or lead"
            )),
        }
    }
}

impl AppConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("cannot parse config {}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
