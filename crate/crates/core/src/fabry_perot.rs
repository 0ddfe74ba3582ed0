//! Single-port resonant cavity optics.
//!
//! The cavity is parametrized by the tuning angle `phi` (round-trip phase
//! offset from resonance, radians) and the input-mirror angle `rho`, whose
//! power reflectivity is cos²ρ. Mirror motion at angular frequency ω
//! scatters carrier light into sidebands: [`sideband_amplitude`] is the
//! first-order response of the output field per meter of motion, and
//! [`carrier_amplitude`] the diagonal second-order response of the carrier.
//! Photon conservation ties the two together: power that disappears from
//! the carrier reappears in the sidebands, and
//! [`photon_conservation_residual`] measures how well the closed forms
//! satisfy that balance.
//!
//! Tunings are stored as multiples of the half-width-half-maximum angle of
//! the power-gain curve, the natural unit in which resonance features have
//! order-one width.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Physical parameters of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityDesign {
    /// Cavity length (m).
    pub length: f64,
    /// Optical wavelength (m).
    pub wavelength: f64,
    /// Test-mass mirror mass (kg).
    pub mass: f64,
    /// Detected optical power (W).
    pub detected_power: f64,
    /// Input-mirror power reflectivity cos²ρ, in (0, 1).
    pub power_reflectivity: f64,
    /// Cavity tuning as a multiple of [`CavityDesign::half_width`]
    /// (dimensionless; positive tunes the cavity long).
    pub tuning: f64,
    /// Photon-count squeezing parameter (dimensionless; 1 is shot-noise
    /// limited).
    pub squeezing: f64,
    /// Intrinsic mechanical spring angular frequency (rad/s; 0 for a free
    /// mass).
    pub mechanical_omega0: f64,
}

impl CavityDesign {
    /// The reference design: a 4 km cavity at 1064 nm with a 40 kg test
    /// mass, 180 W detected power, power reflectivity 0.99913, shot-noise
    /// limited counting, and the cavity tuned long by ten half-widths (the
    /// operating point used for the worked dynamics and noise results).
    pub fn reference() -> Self {
        Self {
            length: 4000.0,
            wavelength: 1.064e-6,
            mass: 40.0,
            detected_power: 180.0,
            power_reflectivity: 0.99913,
            tuning: 10.0,
            squeezing: 1.0,
            mechanical_omega0: 0.0,
        }
    }

    /// Checks every parameter range. Library entry points that build kernel
    /// sets call this; the raw amplitude functions assume it has passed.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.length, "length"),
            (self.wavelength, "wavelength"),
            (self.mass, "mass"),
            (self.detected_power, "detected_power"),
            (self.squeezing, "squeezing"),
        ];
        for (value, name) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidDesign(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !self.power_reflectivity.is_finite()
            || self.power_reflectivity <= 0.0
            || self.power_reflectivity >= 1.0
        {
            return Err(Error::InvalidDesign(format!(
                "power_reflectivity must lie strictly inside (0, 1), got {}",
                self.power_reflectivity
            )));
        }
        if !self.tuning.is_finite() {
            return Err(Error::InvalidDesign(format!(
                "tuning must be finite, got {}",
                self.tuning
            )));
        }
        if !self.mechanical_omega0.is_finite() || self.mechanical_omega0 < 0.0 {
            return Err(Error::InvalidDesign(format!(
                "mechanical_omega0 must be nonnegative and finite, got {}",
                self.mechanical_omega0
            )));
        }
        Ok(())
    }

    /// Optical wavenumber k = 2π/λ (rad/m).
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// One-way light transit time τ = L/c (s).
    pub fn transit_time(&self) -> f64 {
        self.length / SPEED_OF_LIGHT
    }

    /// Mean detected photon flux r = P·λ/(2πħc) (photons/s), equal to the
    /// input flux for a lossless single-port cavity.
    pub fn input_flux(&self) -> f64 {
        self.detected_power * self.wavelength / (TAU * HBAR * SPEED_OF_LIGHT)
    }

    /// Input-mirror angle ρ = arccos(√(power reflectivity)) (radians).
    pub fn reflectivity_angle(&self) -> f64 {
        self.power_reflectivity.sqrt().acos()
    }

    /// Half-width-half-maximum of the power-gain curve in tuning angle
    /// (radians): the detuning at which the intra-cavity power falls to half
    /// its resonant value (exact in the high-finesse regime).
    pub fn half_width(&self) -> f64 {
        let cos_rho = self.power_reflectivity.sqrt();
        0.5 * (1.0 - cos_rho) / cos_rho.sqrt()
    }

    /// Cavity finesse π/(2·half-width).
    pub fn finesse(&self) -> f64 {
        PI / (2.0 * self.half_width())
    }

    /// Tuning angle φ in radians.
    pub fn phi(&self) -> f64 {
        self.tuning * self.half_width()
    }

    /// Copy of the design at a different tuning (in half-widths).
    pub fn with_tuning(&self, tuning: f64) -> Self {
        Self { tuning, ..*self }
    }
}

/// Intra-cavity power gain |sin ρ / (cos ρ − e^{−2iφ})|² at tuning angle
/// `phi` (radians) for input-mirror angle `rho` (radians). Periodic in φ
/// with period π and maximal on resonance (φ ≡ 0 mod π). The boundary case
/// ρ = π/2 (no input mirror) gives gain 1 at every tuning.
///
/// The denominator is evaluated as (1 − cos ρ)² + 4·cos ρ·sin²φ rather than
/// the literal expansion 1 − 2·cos ρ·cos 2φ + cos²ρ, which cancels
/// catastrophically at high finesse near resonance.
pub fn cavity_gain(phi: f64, rho: f64) -> f64 {
    let cos_rho = rho.cos();
    let sin_rho = rho.sin();
    let one_minus = 2.0 * (0.5 * rho).sin().powi(2);
    let sin_phi = phi.sin();
    sin_rho * sin_rho / (one_minus * one_minus + 4.0 * cos_rho * sin_phi * sin_phi)
}

/// Half-width-half-maximum of [`cavity_gain`] in tuning angle (radians):
/// ½·√(cos ρ + 1/cos ρ − 2) = (1 − cos ρ)/(2·√cos ρ). Domain: cos ρ > 0.
pub fn half_width(rho: f64) -> Result<f64> {
    let cos_rho = rho.cos();
    if cos_rho <= 0.0 {
        return Err(Error::Domain(format!(
            "half_width needs cos(rho) > 0, got rho = {rho}"
        )));
    }
    Ok(0.5 * (1.0 - cos_rho) / cos_rho.sqrt())
}

/// Cavity finesse π/(2·half-width) for input-mirror angle `rho` (radians).
pub fn finesse(rho: f64) -> Result<f64> {
    Ok(PI / (2.0 * half_width(rho)?))
}

/// First-order sideband scattering amplitude (1/m): the response of the
/// output field at frequency offset ω to mirror motion, per meter of motion.
/// Its magnitude peaks in ω where ωτ ≡ φ (mod 2π), i.e. where the sideband
/// lands on the cavity resonance.
pub fn sideband_amplitude(omega: f64, design: &CavityDesign) -> Complex64 {
    let k = design.wavenumber();
    let tau = design.transit_time();
    let phi = design.phi();
    let cos_rho = design.power_reflectivity.sqrt();
    let sin_rho_sq = 1.0 - cos_rho * cos_rho;

    let numerator = Complex64::new(0.0, 2.0 * k)
        * Complex64::from_polar(1.0, 3.0 * omega * tau - 2.0 * phi)
        * sin_rho_sq;
    let denominator = (Complex64::from_polar(1.0, 2.0 * (omega * tau - phi)) - cos_rho)
        * (1.0 - Complex64::from_polar(1.0, -2.0 * phi) * cos_rho);
    numerator / denominator
}

/// Diagonal second-order carrier response (1/m²): the depletion of the
/// carrier by mirror motion at ±ω. Symmetric under ω → −ω.
pub fn carrier_amplitude(omega: f64, design: &CavityDesign) -> Complex64 {
    let cos_rho = design.power_reflectivity.sqrt();
    let sin_rho_sq = 1.0 - cos_rho * cos_rho;
    let phi = design.phi();

    let alpha_product = sideband_amplitude(omega, design) * sideband_amplitude(-omega, design);
    let bracket = Complex64::new(sin_rho_sq, 2.0 * (2.0 * phi).sin() * cos_rho);
    alpha_product * bracket / (2.0 * sin_rho_sq)
}

/// Both sideband amplitudes and the diagonal carrier response at ±ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandPair {
    /// Sideband amplitude at +ω (1/m).
    pub alpha_plus: Complex64,
    /// Sideband amplitude at −ω (1/m).
    pub alpha_minus: Complex64,
    /// Diagonal carrier response at (ω, −ω) (1/m²).
    pub beta_diag: Complex64,
}

/// Evaluates [`sideband_amplitude`] at ±ω and [`carrier_amplitude`] in one
/// call.
pub fn sideband_pair(omega: f64, design: &CavityDesign) -> SidebandPair {
    SidebandPair {
        alpha_plus: sideband_amplitude(omega, design),
        alpha_minus: sideband_amplitude(-omega, design),
        beta_diag: carrier_amplitude(omega, design),
    }
}

/// Relative photon-conservation residual at ω. Power scattered out of the
/// carrier must reappear in the sidebands:
///
/// ```text
/// |alpha(+omega)|² + |alpha(−omega)|² + 2·Re[beta(omega,−omega) + beta(−omega,omega)] = 0
/// ```
///
/// and since the diagonal carrier response is even in ω the symmetrized term
/// equals 4·Re beta(ω,−ω). Returns the magnitude of the left-hand side
/// divided by the sideband power |α(ω)|² + |α(−ω)|².
pub fn photon_conservation_residual(omega: f64, design: &CavityDesign) -> f64 {
    let pair = sideband_pair(omega, design);
    let sideband_power = pair.alpha_plus.norm_sqr() + pair.alpha_minus.norm_sqr();
    (sideband_power + 4.0 * pair.beta_diag.re).abs() / sideband_power
}

/// Phase factor of the mean output light, (e^{−2iφ}·cos ρ − 1)/(cos ρ −
/// e^{−2iφ}). Always of unit magnitude: a lossless single-port cavity can
/// only rotate the carrier phase.
pub fn output_phase(design: &CavityDesign) -> Complex64 {
    let cos_rho = design.power_reflectivity.sqrt();
    let rotation = Complex64::from_polar(1.0, -2.0 * design.phi());
    (rotation * cos_rho - 1.0) / (cos_rho - rotation)
}

/// Angular frequency (rad/s) at which |sideband amplitude| peaks over
/// ω ∈ (0, 0.499·π/τ), located by a coarse scan and golden-section
/// refinement. For a cavity tuned long the peak sits near φ/τ, the offset at
/// which the sideband is shifted back onto resonance.
pub fn sideband_peak_frequency(design: &CavityDesign) -> f64 {
    let tau = design.transit_time();
    let upper = 0.499 * PI / tau;
    let scan_points = 4000;

    let magnitude = |omega: f64| sideband_amplitude(omega, design).norm();
    let mut best_index = 1;
    let mut best_value = f64::NEG_INFINITY;
    for i in 1..=scan_points {
        let omega = upper * i as f64 / scan_points as f64;
        let value = magnitude(omega);
        if value > best_value {
            best_value = value;
            best_index = i;
        }
    }
    let low = upper * (best_index - 1) as f64 / scan_points as f64;
    let high = upper * ((best_index + 1).min(scan_points)) as f64 / scan_points as f64;
    golden_section_max(magnitude, low, high, 1e-10)
}

/// Golden-section search for the maximizer of `f` on [low, high] to the
/// given relative bracket width.
fn golden_section_max(f: impl Fn(f64) -> f64, mut low: f64, mut high: f64, rel_tol: f64) -> f64 {
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = high - inv_phi * (high - low);
    let mut x2 = low + inv_phi * (high - low);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while high - low > rel_tol * high.abs() {
        if f1 < f2 {
            low = x1;
            x1 = x2;
            f1 = f2;
            x2 = low + inv_phi * (high - low);
            f2 = f(x2);
        } else {
            high = x2;
            x2 = x1;
            f2 = f1;
            x1 = high - inv_phi * (high - low);
            f1 = f(x1);
        }
    }
    0.5 * (low + high)
}
