//! Monte Carlo cross-check of the closed-loop algebra.
//!
//! Instead of using the closed-form loop solutions, the simulator draws the
//! two noises as complex Gaussians frequency by frequency and solves the raw
//! loop relations as a 3×3 linear system in the unknowns (position, detected
//! output, control force):
//!
//! ```text
//! q − G·f_c           = G·(f_e + f_n)
//! −ξ·q + y            = ξ·q_n
//! (Γ + Γ′)·y + f_c    = Γ·y_c
//! ```
//!
//! Averaging |y|² over realizations estimates the output spectral density;
//! averaging y estimates the mean response. Agreement with
//! [`LoopKernels::closed_loop_psd`] and [`LoopKernels::closed_loop_mean`]
//! validates the kernel algebra end to end.
//!
//! Draws are keyed by (seed, |ω|, realization, purpose), so results are
//! reproducible bit for bit, independent of evaluation order, and exactly
//! even in ω: at −ω the same draws are conjugated, and conjugation commutes
//! with the whole linear solve.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::loop_model::{Controller, LoopKernels};

const PSD_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const MEAN_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

/// Simulation parameters.
///
/// The simulator closes the loop with `controller`; the `control` closure of
/// the [`LoopKernels`] it receives is ignored, so one kernel bundle can be
/// re-simulated under several controllers.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Base seed; every (frequency, realization) substream derives from it.
    pub seed: u64,
    /// Number of independent realizations per frequency (at least 2).
    pub realizations: usize,
    /// Frequencies to simulate (rad/s).
    pub grid: FrequencyGrid,
    /// Feedback controller closing the loop.
    pub controller: Controller,
}

/// Spectral-density estimate at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdEstimate {
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Estimated two-sided output PSD.
    pub psd: f64,
    /// Standard error of the estimate.
    pub std_error: f64,
    /// Set when the standard error exceeds 10% of the estimate.
    pub low_confidence: bool,
}

/// Mean-response estimate at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Estimated mean detected output.
    pub mean: Complex64,
    /// Standard error of the complex mean (both quadratures combined).
    pub std_error: f64,
}

/// Estimates the stationary output PSD at every grid frequency by averaging
/// |y|² over noise realizations.
pub fn simulate_psd(kernels: &LoopKernels, config: &SimConfig) -> Result<Vec<PsdEstimate>> {
    validate(config)?;
    config
        .grid
        .iter()
        .map(|omega| psd_point(kernels, config, omega))
        .collect()
}

/// Estimates the mean output under a deterministic force `fe` and set-point
/// `yc` at every grid frequency, noise included.
pub fn simulate_mean(
    kernels: &LoopKernels,
    fe: Complex64,
    yc: Complex64,
    config: &SimConfig,
) -> Result<Vec<MeanEstimate>> {
    validate(config)?;
    config
        .grid
        .iter()
        .map(|omega| mean_point(kernels, config, omega, fe, yc))
        .collect()
}

fn validate(config: &SimConfig) -> Result<()> {
    if config.realizations < 2 {
        return Err(Error::Domain(format!(
            "error bars need at least 2 realizations, got {}",
            config.realizations
        )));
    }
    Ok(())
}

fn psd_point(kernels: &LoopKernels, config: &SimConfig, omega: f64) -> Result<PsdEstimate> {
    let point = LoopPoint::evaluate(kernels, config, omega)?;
    let mut magnitudes = Vec::with_capacity(config.realizations);
    for realization in 0..config.realizations {
        let output = point.realize(
            config.seed,
            realization as u64,
            PSD_STREAM,
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        )?;
        magnitudes.push(output.norm_sqr());
    }
    let n = magnitudes.len() as f64;
    let psd = magnitudes.iter().sum::<f64>() / n;
    let variance = magnitudes
        .iter()
        .map(|m| (m - psd) * (m - psd))
        .sum::<f64>()
        / (n - 1.0);
    let std_error = (variance / n).sqrt();
    Ok(PsdEstimate {
        omega,
        psd,
        std_error,
        low_confidence: std_error > 0.1 * psd,
    })
}

fn mean_point(
    kernels: &LoopKernels,
    config: &SimConfig,
    omega: f64,
    fe: Complex64,
    yc: Complex64,
) -> Result<MeanEstimate> {
    let point = LoopPoint::evaluate(kernels, config, omega)?;
    let mut outputs = Vec::with_capacity(config.realizations);
    for realization in 0..config.realizations {
        outputs.push(point.realize(config.seed, realization as u64, MEAN_STREAM, fe, yc)?);
    }
    let n = outputs.len() as f64;
    let mean = outputs.iter().sum::<Complex64>() / n;
    let variance = outputs.iter().map(|y| (y - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    Ok(MeanEstimate {
        omega,
        mean,
        std_error: (variance / n).sqrt(),
    })
}

/// Kernel values frozen at one frequency.
struct LoopPoint {
    omega: f64,
    xi: Complex64,
    process: Complex64,
    control: Complex64,
    feedback_sum: Complex64,
    qn_scale: f64,
    fn_scale: f64,
}

impl LoopPoint {
    fn evaluate(kernels: &LoopKernels, config: &SimConfig, omega: f64) -> Result<Self> {
        let sq = (kernels.measurement_noise)(omega);
        let sf = (kernels.force_noise)(omega);
        if !sq.is_finite() || !sf.is_finite() || sq < 0.0 || sf < 0.0 {
            return Err(Error::NonFinite(format!(
                "noise floors S_q = {sq}, S_f = {sf} at omega = {omega}"
            )));
        }
        let control = config.controller.evaluate(omega);
        Ok(Self {
            omega,
            xi: (kernels.measurement)(omega),
            process: (kernels.process)(omega),
            control,
            feedback_sum: control + (kernels.backaction)(omega),
            qn_scale: (0.5 * sq).sqrt(),
            fn_scale: (0.5 * sf).sqrt(),
        })
    }

    /// Draws one noise realization and solves the loop for the detected
    /// output.
    fn realize(
        &self,
        seed: u64,
        realization: u64,
        stream: u64,
        fe: Complex64,
        yc: Complex64,
    ) -> Result<Complex64> {
        let mut rng = substream(seed, self.omega, realization, stream);
        let n0: f64 = rng.sample(StandardNormal);
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        let n3: f64 = rng.sample(StandardNormal);
        let flip = if self.omega < 0.0 { -1.0 } else { 1.0 };
        let qn = Complex64::new(self.qn_scale * n0, flip * self.qn_scale * n1);
        let fn_draw = Complex64::new(self.fn_scale * n2, flip * self.fn_scale * n3);

        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let matrix = [
            [one, zero, -self.process],
            [-self.xi, one, zero],
            [zero, self.feedback_sum, one],
        ];
        let rhs = [
            self.process * (fe + fn_draw),
            self.xi * qn,
            self.control * yc,
        ];
        let solution = solve3(matrix, rhs).ok_or(Error::SingularLoop { omega: self.omega })?;
        Ok(solution[1])
    }
}

/// Dedicated RNG for one (seed, frequency, realization, purpose) cell. The
/// frequency enters through |ω| so that ±ω share draws.
fn substream(seed: u64, omega: f64, realization: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&omega.abs().to_bits().to_le_bytes());
    key[16..24].copy_from_slice(&realization.to_le_bytes());
    key[24..32].copy_from_slice(&stream.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Gaussian elimination with partial pivoting on a 3×3 complex system.
/// Returns `None` on an exactly singular pivot.
fn solve3(mut a: [[Complex64; 3]; 3], mut b: [Complex64; 3]) -> Option<[Complex64; 3]> {
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&r, &s| a[r][col].norm().total_cmp(&a[s][col].norm()))
            .unwrap();
        if a[pivot_row][col].norm() == 0.0 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col];
        for row in col + 1..3 {
            let factor = a[row][col] / pivot[col];
            for (k, pivot_entry) in pivot.iter().enumerate().skip(col) {
                a[row][k] -= factor * pivot_entry;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut sum = b[row];
        for k in row + 1..3 {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}
