//! Translation of the cavity optics into measurement-loop kernels.
//!
//! A photon-counting readout of the cavity output measures mirror position,
//! but it also pushes the mirror: radiation pressure fluctuates with the
//! detected flux, and the mean pressure depends on the detuning, giving an
//! optical spring. [`KernelSet`] packages the complete set of
//! frequency-domain kernels implied by the scattering amplitudes of
//! [`crate::fabry_perot`]:
//!
//! - [`KernelSet::measurement`]: detected flux per meter of mirror motion,
//! - [`KernelSet::backaction`]: radiation-pressure force fed back per unit
//!   detected flux,
//! - [`KernelSet::optical_spring`]: the in-loop pressure stiffness entering
//!   the mechanical response,
//! - [`KernelSet::noise_psds`]: the photon-counting position-noise floor
//!   and the conjugate force noise, whose product is pinned at ħ²/4.
//!
//! Static limits ([`KernelSet::static_force`], [`KernelSet::static_spring`])
//! and a two-route energy balance ([`KernelSet::energy_balance`]) provide
//! independent cross-checks of the kernel algebra.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::Arc;

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::fabry_perot::{carrier_amplitude, cavity_gain, sideband_amplitude, CavityDesign};
use crate::loop_model::{Controller, LoopKernels, DEFAULT_SINGULAR_EPS};

/// Relative threshold below which the measurement kernel counts as blind:
/// |α(ω) + α*(−ω)| compared against 1e-12·(|α(ω)| + |α(−ω)|).
pub const BLIND_EPS: f64 = 1e-12;

/// Evaluator for every loop kernel of a validated cavity design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSet {
    design: CavityDesign,
}

/// Power extracted from a driven mirror oscillation, computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// Extracted power from the loop kernels Γ′ and ξ (W).
    pub kernel_route: f64,
    /// Extracted power from the sideband photon imbalance (W).
    pub sideband_route: f64,
}

impl KernelSet {
    /// Validates the design and wraps it.
    pub fn new(design: CavityDesign) -> Result<Self> {
        design.validate()?;
        Ok(Self { design })
    }

    /// The underlying design.
    pub fn design(&self) -> CavityDesign {
        self.design
    }

    /// Backaction kernel Γ′(ω) (N per unit detected flux): the
    /// radiation-pressure force the loop feeds back per unit of measured
    /// output, (iħ/2)·(α(−ω) − α*(ω)).
    pub fn backaction(&self, omega: f64) -> Complex64 {
        let alpha_minus = sideband_amplitude(-omega, &self.design);
        let alpha_plus = sideband_amplitude(omega, &self.design);
        Complex64::new(0.0, 0.5 * HBAR) * (alpha_minus - alpha_plus.conj())
    }

    /// Pressure-coupling kernel θ(ω) (flux per newton·s⁻¹-free units): the
    /// reciprocal coupling of force fluctuations into the output,
    /// −(iħ/2)·(α(ω) − α*(−ω)). Reciprocity demands θ(ω) = −Γ′(−ω); the two
    /// are computed from independently expanded forms so the relation stays
    /// a testable statement.
    pub fn pressure_coupling(&self, omega: f64) -> Complex64 {
        let alpha_plus = sideband_amplitude(omega, &self.design);
        let alpha_minus = sideband_amplitude(-omega, &self.design);
        Complex64::new(0.0, -0.5 * HBAR) * (alpha_plus - alpha_minus.conj())
    }

    /// Optical-spring kernel before discarding its vanishing imaginary part
    /// (N/m). Built from the asymmetry between the carrier depletion and the
    /// sideband product; the construction is exactly real, so the imaginary
    /// part returned here measures only rounding.
    pub fn optical_spring_raw(&self, omega: f64) -> Complex64 {
        let combination = |nu: f64| {
            2.0 * carrier_amplitude(nu, &self.design)
                - sideband_amplitude(nu, &self.design) * sideband_amplitude(-nu, &self.design)
        };
        let forward = combination(omega);
        let backward = combination(-omega);
        Complex64::new(0.0, 0.5 * HBAR * self.design.input_flux()) * (forward - backward.conj())
    }

    /// Optical-spring stiffness ψ(ω) (N/m) entering the mechanical
    /// response.
    pub fn optical_spring(&self, omega: f64) -> f64 {
        self.optical_spring_raw(omega).re
    }

    /// Measurement kernel ξ(ω) (detected flux per meter of motion),
    /// r·(α(ω) + α*(−ω)).
    pub fn measurement(&self, omega: f64) -> Complex64 {
        let alpha_plus = sideband_amplitude(omega, &self.design);
        let alpha_minus = sideband_amplitude(-omega, &self.design);
        self.design.input_flux() * (alpha_plus + alpha_minus.conj())
    }

    /// Two-sided spectral density of the raw photon-counting output
    /// (flux²·s): the counting noise floor, squeezing times the mean flux.
    pub fn flux_psd(&self) -> f64 {
        self.design.squeezing * self.design.input_flux()
    }

    /// Inverse mechanical response m(ω₀² − ω²) + ψ(ω) (N/m), including the
    /// optical spring. Real up to rounding.
    pub fn inverse_mechanical_response(&self, omega: f64) -> Complex64 {
        let intrinsic = self.design.mass
            * (self.design.mechanical_omega0 * self.design.mechanical_omega0 - omega * omega);
        intrinsic + self.optical_spring_raw(omega)
    }

    /// Mechanical process kernel G(ω) (m/N): position response per unit
    /// force, with the optical spring folded in.
    pub fn mechanical_response(&self, omega: f64) -> Complex64 {
        Complex64::new(1.0, 0.0) / self.inverse_mechanical_response(omega)
    }

    /// Position-noise floor S_q and conjugate force noise S_f (two-sided,
    /// m²·s and N²·s). Their product is ħ²/4 identically. Fails with
    /// [`Error::MeasurementBlind`] where the measurement kernel vanishes
    /// (always the case at ω = 0: a static displacement only rephases the
    /// carrier, which photon counting cannot see).
    pub fn noise_psds(&self, omega: f64) -> Result<(f64, f64)> {
        let alpha_plus = sideband_amplitude(omega, &self.design);
        let alpha_minus = sideband_amplitude(-omega, &self.design);
        let xi_scale = alpha_plus + alpha_minus.conj();
        if xi_scale.norm() <= BLIND_EPS * (alpha_plus.norm() + alpha_minus.norm()) {
            return Err(Error::MeasurementBlind { omega });
        }
        let xi = self.design.input_flux() * xi_scale;
        let sq = self.flux_psd() / xi.norm_sqr();
        let sf = HBAR * HBAR / (4.0 * sq);
        Ok((sq, sf))
    }

    /// Mean radiation-pressure force on the mirror (N), −r·Γ′(0).
    pub fn static_force(&self) -> f64 {
        -self.design.input_flux() * self.backaction(0.0).re
    }

    /// Mean radiation-pressure force (N) through the intra-cavity power
    /// gain, 2ħk·r·G(φ): each of the r·G circulating photons transfers 2ħk
    /// of momentum per reflection. Independent cross-check of
    /// [`KernelSet::static_force`].
    pub fn static_force_from_gain(&self) -> f64 {
        let k = self.design.wavenumber();
        let gain = cavity_gain(self.design.phi(), self.design.reflectivity_angle());
        2.0 * HBAR * k * self.design.input_flux() * gain
    }

    /// Static optical-spring constant (N/m): the ω → 0 limit of ψ(ω), taken
    /// by one Richardson extrapolation from ω around 2π·10⁻³ rad/s.
    pub fn static_spring(&self) -> f64 {
        let omega = TAU * 1e-3;
        (4.0 * self.optical_spring(0.5 * omega) - self.optical_spring(omega)) / 3.0
    }

    /// Static spring constant (N/m) from the tuning derivative of the power
    /// gain, −2ħk²·r·∂G/∂φ: mirror motion retunes the cavity, and the
    /// retuned circulating power changes the pressure. Central differences
    /// with step halving and one Richardson stage. Independent cross-check
    /// of [`KernelSet::static_spring`].
    pub fn static_spring_from_gain_derivative(&self) -> f64 {
        let rho = self.design.reflectivity_angle();
        let phi = self.design.phi();
        let mut h = 1e-6 * self.design.half_width();
        let central = |h: f64| (cavity_gain(phi + h, rho) - cavity_gain(phi - h, rho)) / (2.0 * h);
        let mut previous = f64::NAN;
        let mut estimate = (4.0 * central(0.5 * h) - central(h)) / 3.0;
        for _ in 0..40 {
            if (estimate - previous).abs() <= 1e-7 * estimate.abs() {
                break;
            }
            previous = estimate;
            h *= 0.5;
            estimate = (4.0 * central(0.5 * h) - central(h)) / 3.0;
        }
        let k = self.design.wavenumber();
        -2.0 * HBAR * k * k * self.design.input_flux() * estimate
    }

    /// Power extracted from a mirror oscillating as q₀·cos(ω_m t), by two
    /// independent routes: the work done by the backaction force against the
    /// coherent motion, and ħω_m times the net photon up-conversion rate
    /// between the two sidebands. Positive values mean the light drains the
    /// oscillation; negative values mean it pumps energy in.
    pub fn energy_balance(&self, omega_m: f64, amplitude: f64) -> Result<EnergyBalance> {
        if !(omega_m.is_finite() && omega_m > 0.0) || !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::Domain(format!(
                "energy balance needs positive frequency and amplitude, got {omega_m} and {amplitude}"
            )));
        }
        let quarter_sq = 0.25 * amplitude * amplitude;

        let forward = self.backaction(omega_m) * self.measurement(omega_m);
        let backward = self.backaction(-omega_m) * self.measurement(-omega_m);
        let kernel_route = (Complex64::new(0.0, -omega_m) * quarter_sq * (backward - forward)).re;

        let alpha_plus = sideband_amplitude(omega_m, &self.design);
        let alpha_minus = sideband_amplitude(-omega_m, &self.design);
        let sideband_route = HBAR
            * omega_m
            * self.design.input_flux()
            * quarter_sq
            * (alpha_plus.norm_sqr() - alpha_minus.norm_sqr());

        Ok(EnergyBalance {
            kernel_route,
            sideband_route,
        })
    }

    /// Bundles every kernel into a [`LoopKernels`] closed around the given
    /// controller. At measurement-blind frequencies the position-noise
    /// kernel returns infinity and the force-noise kernel zero, the limits
    /// of the closed forms as the measurement vanishes.
    pub fn loop_kernels(&self, controller: &Controller) -> LoopKernels {
        let set = *self;
        LoopKernels {
            control: controller.kernel(),
            backaction: Arc::new(move |omega| set.backaction(omega)),
            measurement: Arc::new(move |omega| set.measurement(omega)),
            process: Arc::new(move |omega| set.mechanical_response(omega)),
            measurement_noise: Arc::new(move |omega| match set.noise_psds(omega) {
                Ok((sq, _)) => sq,
                Err(_) => f64::INFINITY,
            }),
            force_noise: Arc::new(move |omega| match set.noise_psds(omega) {
                Ok((_, sf)) => sf,
                Err(_) => 0.0,
            }),
            singular_eps: DEFAULT_SINGULAR_EPS,
        }
    }
}
