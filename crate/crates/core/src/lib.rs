//! Classical dynamics and quantum noise of a test mass read out by a
//! resonant optical cavity.
//!
//! The library is organized around a measurement-and-control loop: an
//! external force and a control force drive a mechanical process, the mirror
//! position is read interferometrically, and the act of measurement feeds a
//! backaction force into the loop. Every kernel of that loop is available in
//! closed form as a function of angular frequency:
//!
//! - [`fabry_perot`] evaluates the cavity optics (sideband and carrier
//!   scattering amplitudes, power gain, line width).
//! - [`measurement_map`] translates the optics into loop kernels: the
//!   backaction kernel, the measurement kernel, the optical spring, and the
//!   shot-noise floor, together with static force/spring and energy-balance
//!   checks.
//! - [`loop_model`] contains the generic closed-loop algebra for the mean
//!   output and its power spectral density, plus the controller presets.
//! - [`dynamics_analysis`] samples the force-to-power transfer function,
//!   fits rational pole-zero models to it, and classifies stability.
//! - [`noise_budget`] assembles strain-referred noise budgets and the
//!   associated quantum limits.
//! - [`loop_simulator`] cross-checks the closed-form algebra by Monte Carlo,
//!   solving the raw loop relations frequency by frequency.
//!
//! All spectral densities are two-sided in angular frequency; conversions to
//! one-sided or rms conventions happen only in output layers.

pub mod constants;
pub mod dynamics_analysis;
pub mod error;
pub mod fabry_perot;
pub mod grid;
pub mod loop_model;
pub mod loop_simulator;
pub mod measurement_map;
pub mod noise_budget;

pub use error::{Error, Result};
pub use fabry_perot::CavityDesign;
pub use grid::FrequencyGrid;
pub use loop_model::{Controller, LoopKernels};
pub use measurement_map::KernelSet;
