//! Closed-loop algebra of the measurement-and-control loop.
//!
//! The loop couples four ingredients, each a frequency-domain kernel:
//!
//! - a mechanical process `G` turning force into position,
//! - a measurement `xi` turning position into detected output,
//! - a measurement backaction `Gamma'` feeding the output back as force
//!   (present whether or not anything is deliberately fed back),
//! - an optional controller `Gamma` doing the same on purpose.
//!
//! Writing `y` for the detected output, `f_e` for the external force and
//! `y_c` for the controller set-point, the loop closes as
//!
//! ```text
//!         xi·G·(f_e + Gamma·y_c)
//! <y> = --------------------------
//!       1 + xi·G·(Gamma + Gamma')
//! ```
//!
//! and the stationary output spectral density adds the position-noise floor
//! `S_q` and the force noise `S_f` incoherently:
//!
//! ```text
//!        |xi|²·(S_q + |G|²·S_f)
//! S_y = --------------------------- .
//!       |1 + xi·G·(Gamma + Gamma')|²
//! ```
//!
//! All kernels are functions of angular frequency ω and analytically
//! continue to s = iω; spectral densities are two-sided.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Frequency-domain kernel returning a complex response at angular
/// frequency ω (rad/s).
pub type ComplexKernel = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Frequency-domain kernel returning a real spectral density at angular
/// frequency ω (rad/s).
pub type RealKernel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative tolerance below which the closed-loop denominator counts as
/// singular.
pub const DEFAULT_SINGULAR_EPS: f64 = 1e-12;

/// The full kernel set of one closed loop.
#[derive(Clone)]
pub struct LoopKernels {
    /// Deliberate feedback kernel Γ(ω) (force per unit output).
    pub control: ComplexKernel,
    /// Measurement-backaction kernel Γ′(ω) (force per unit output).
    pub backaction: ComplexKernel,
    /// Measurement kernel ξ(ω) (output per meter).
    pub measurement: ComplexKernel,
    /// Mechanical process G(ω) (meters per newton).
    pub process: ComplexKernel,
    /// Position-noise floor S_q(ω) referred to the output (two-sided).
    pub measurement_noise: RealKernel,
    /// Backaction force noise S_f(ω) (two-sided).
    pub force_noise: RealKernel,
    /// Relative singularity tolerance for the loop denominator.
    pub singular_eps: f64,
}

impl LoopKernels {
    /// Closed-loop denominator 1 + ξG(Γ + Γ′). Fails with
    /// [`Error::SingularLoop`] when the sum cancels to within
    /// `singular_eps` relative to the open-loop gain, since every
    /// closed-loop quantity divides by it.
    pub fn denominator(&self, omega: f64) -> Result<Complex64> {
        let open_loop = (self.measurement)(omega)
            * (self.process)(omega)
            * ((self.control)(omega) + (self.backaction)(omega));
        let denominator = Complex64::new(1.0, 0.0) + open_loop;
        if denominator.norm() <= self.singular_eps * open_loop.norm() {
            return Err(Error::SingularLoop { omega });
        }
        Ok(denominator)
    }

    /// Mean detected output under a deterministic external force `fe` and
    /// controller set-point `yc` at angular frequency ω.
    pub fn closed_loop_mean(&self, omega: f64, fe: Complex64, yc: Complex64) -> Result<Complex64> {
        let drive = fe + (self.control)(omega) * yc;
        let forward = (self.measurement)(omega) * (self.process)(omega) * drive;
        Ok(forward / self.denominator(omega)?)
    }

    /// Two-sided spectral density of the stationary detected output at
    /// angular frequency ω.
    pub fn closed_loop_psd(&self, omega: f64) -> Result<f64> {
        let xi = (self.measurement)(omega);
        let process = (self.process)(omega);
        let numerator = xi.norm_sqr()
            * ((self.measurement_noise)(omega) + process.norm_sqr() * (self.force_noise)(omega));
        Ok(numerator / self.denominator(omega)?.norm_sqr())
    }

    /// Closed-loop response of the detected output to a unit external force
    /// (output per newton).
    pub fn response_to_force(&self, omega: f64) -> Result<Complex64> {
        self.closed_loop_mean(omega, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Output spectral density referred back through the force response and
    /// expressed as strain of a baseline of the given length:
    /// S_y / (|response|²·(m·ω²·L)²), the apparent strain noise of an
    /// inertial test mass of mass `mass` on a baseline `length`.
    pub fn referred_strain_psd(&self, omega: f64, mass: f64, length: f64) -> Result<f64> {
        if omega == 0.0 {
            return Err(Error::Domain(
                "strain referral needs omega != 0 (free-mass response diverges)".into(),
            ));
        }
        if mass <= 0.0 || length <= 0.0 {
            return Err(Error::Domain(format!(
                "strain referral needs positive mass and length, got {mass} and {length}"
            )));
        }
        let psd = self.closed_loop_psd(omega)?;
        let response = self.response_to_force(omega)?;
        let force_scale = mass * omega * omega * length;
        Ok(psd / (response.norm_sqr() * force_scale * force_scale))
    }

    /// Copy of the kernels with the control kernel replaced by the given
    /// controller preset.
    pub fn with_controller(&self, controller: &Controller) -> Self {
        Self {
            control: controller.kernel(),
            ..self.clone()
        }
    }
}

/// Controller presets for the deliberate feedback kernel Γ(ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Controller {
    /// No deliberate feedback.
    Zero,
    /// Viscous damping rolled off above a corner frequency:
    /// Γ(ω) = gain · iω / (1 + iω/corner).
    VelocityFeedback {
        /// Feedback strength (N·s/m per unit output).
        gain: f64,
        /// Roll-off corner (rad/s).
        corner: f64,
    },
    /// Damping with a second-order roll-off:
    /// Γ(ω) = gain · iω / (1 + 2ζ(iω/corner) + (iω/corner)²).
    SecondOrderLead {
        /// Feedback strength (N·s/m per unit output).
        gain: f64,
        /// Roll-off corner (rad/s).
        corner: f64,
        /// Roll-off damping ratio ζ.
        damping: f64,
    },
}

impl Controller {
    /// Evaluates the controller kernel at angular frequency ω.
    pub fn evaluate(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        match *self {
            Controller::Zero => Complex64::new(0.0, 0.0),
            Controller::VelocityFeedback { gain, corner } => gain * s / (1.0 + s / corner),
            Controller::SecondOrderLead {
                gain,
                corner,
                damping,
            } => {
                let x = s / corner;
                gain * s / (1.0 + 2.0 * damping * x + x * x)
            }
        }
    }

    /// The controller as a shareable kernel.
    pub fn kernel(&self) -> ComplexKernel {
        let controller = *self;
        Arc::new(move |omega| controller.evaluate(omega))
    }

    /// A velocity-feedback preset strong enough to damp the optical spring
    /// of the reference design without reshaping the band above 10 Hz.
    pub fn default_stabilizing() -> Self {
        Controller::VelocityFeedback {
            gain: 1e-26,
            corner: TAU * 200.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(value: Complex64) -> ComplexKernel {
        Arc::new(move |_| value)
    }

    fn unit_loop() -> LoopKernels {
        LoopKernels {
            control: constant(Complex64::new(0.0, 0.0)),
            backaction: constant(Complex64::new(0.0, 0.0)),
            measurement: constant(Complex64::new(1.0, 0.0)),
            process: constant(Complex64::new(1.0, 0.0)),
            measurement_noise: Arc::new(|_| 0.0),
            force_noise: Arc::new(|_| 0.0),
            singular_eps: DEFAULT_SINGULAR_EPS,
        }
    }

    #[test]
    fn open_loop_passthrough() {
        let loop_kernels = unit_loop();
        let mean = loop_kernels
            .closed_loop_mean(1.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            .unwrap();
        assert!((mean - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_drive_means_zero_output() {
        let mut loop_kernels = unit_loop();
        loop_kernels.control = constant(Complex64::new(0.5, 0.1));
        loop_kernels.backaction = constant(Complex64::new(-0.2, 0.3));
        let mean = loop_kernels
            .closed_loop_mean(3.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
            .unwrap();
        assert_eq!(mean, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn psd_adds_noise_floors() {
        let mut loop_kernels = unit_loop();
        loop_kernels.measurement_noise = Arc::new(|_| 1.0);
        loop_kernels.force_noise = Arc::new(|_| 2.0);
        let psd = loop_kernels.closed_loop_psd(1.0).unwrap();
        assert!((psd - 3.0).abs() < 1e-15);
    }

    #[test]
    fn negative_feedback_quarters_the_mean() {
        let mut loop_kernels = unit_loop();
        loop_kernels.control = constant(Complex64::new(3.0, 0.0));
        let mean = loop_kernels
            .closed_loop_mean(1.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            .unwrap();
        assert!((mean - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        let psd_open = unit_loop();
        let mut psd_closed = unit_loop();
        psd_closed.control = constant(Complex64::new(3.0, 0.0));
        psd_closed.measurement_noise = Arc::new(|_| 1.0);
        let mut open = psd_open;
        open.measurement_noise = Arc::new(|_| 1.0);
        let ratio = psd_closed.closed_loop_psd(1.0).unwrap() / open.closed_loop_psd(1.0).unwrap();
        assert!((ratio - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn exact_cancellation_is_singular() {
        let mut loop_kernels = unit_loop();
        loop_kernels.control = constant(Complex64::new(-1.0, 0.0));
        let err = loop_kernels.denominator(2.0).unwrap_err();
        assert!(matches!(err, Error::SingularLoop { omega } if omega == 2.0));
        assert!(loop_kernels.closed_loop_psd(2.0).is_err());
        assert!(loop_kernels.response_to_force(2.0).is_err());
    }

    #[test]
    fn referral_rejects_bad_arguments() {
        let loop_kernels = unit_loop();
        assert!(loop_kernels.referred_strain_psd(0.0, 1.0, 1.0).is_err());
        assert!(loop_kernels.referred_strain_psd(1.0, -1.0, 1.0).is_err());
        assert!(loop_kernels.referred_strain_psd(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn with_controller_swaps_only_the_control_kernel() {
        let loop_kernels = unit_loop();
        let damped = loop_kernels.with_controller(&Controller::VelocityFeedback {
            gain: 2.0,
            corner: 10.0,
        });
        let expected = Controller::VelocityFeedback {
            gain: 2.0,
            corner: 10.0,
        }
        .evaluate(3.0);
        assert!(((damped.control)(3.0) - expected).norm() < 1e-15);
        assert_eq!((damped.measurement)(5.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn controller_limits() {
        let velocity = Controller::VelocityFeedback {
            gain: 2.0,
            corner: 100.0,
        };
        // Far below the corner the kernel is pure damping, gain·iω.
        let low = velocity.evaluate(0.01);
        assert!((low - Complex64::new(0.0, 0.02)).norm() < 1e-5);
        // Far above it flattens to gain·corner.
        let high = velocity.evaluate(1e7);
        assert!((high - Complex64::new(200.0, 0.0)).norm() < 0.01);

        let lead = Controller::SecondOrderLead {
            gain: 2.0,
            corner: 100.0,
            damping: 0.7,
        };
        let low_lead = lead.evaluate(0.01);
        assert!((low_lead - Complex64::new(0.0, 0.02)).norm() < 1e-5);
        // Second-order roll-off falls with 1/ω above the corner.
        assert!(lead.evaluate(1e5).norm() < 0.3);
        assert_eq!(Controller::Zero.evaluate(5.0), Complex64::new(0.0, 0.0));
    }
}
