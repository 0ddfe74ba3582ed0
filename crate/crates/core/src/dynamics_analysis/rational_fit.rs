//! Weighted iterative rational fitting of sampled frequency responses.
//!
//! The fit linearizes T(s) ≈ N(s)/D(s) into the equation T·D − N = 0, which
//! is linear in the polynomial coefficients, and solves it by weighted least
//! squares. A single linear solve overweights frequencies where |D| is
//! large, so the solve is repeated with each row divided by |D| from the
//! previous iteration until the denominator roots stop moving. Row weights
//! also divide by the sample magnitude (floored at a fraction of the peak)
//! so that a response spanning many orders contributes comparably
//! everywhere; without the floor, samples near a true zero of the response
//! dominate the system and the fitted zero wanders.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::ComplexResponse;
use crate::error::{Error, Result};

/// Tunable knobs of [`fit_rational_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Maximum number of reweighting iterations.
    pub max_iterations: usize,
    /// Largest acceptable peak-normalized residual.
    pub residual_bound: f64,
    /// Per-sample weight floor as a fraction of the peak magnitude.
    pub weight_floor: f64,
    /// Roots farther than this factor times the top grid frequency are
    /// dropped from the model, with their in-band effect absorbed into the
    /// gain.
    pub trust_factor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 40,
            residual_bound: 0.05,
            weight_floor: 3e-3,
            trust_factor: 20.0,
        }
    }
}

/// A rational model gain·Π(s − zᵢ)/Π(s − pⱼ) in the Laplace variable
/// s = iω.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleZeroModel {
    /// Model zeros (rad/s).
    pub zeros: Vec<Complex64>,
    /// Model poles (rad/s).
    pub poles: Vec<Complex64>,
    /// Leading gain; units of the samples times (rad/s)^(poles − zeros).
    pub gain: f64,
    /// Peak-normalized worst-case residual over the fitted grid.
    pub fit_residual: f64,
}

/// Stability summary of one pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleReport {
    /// Natural frequency |s|/2π (Hz).
    pub natural_frequency: f64,
    /// Quality factor −|s|/(2·Re s): positive for decaying poles, negative
    /// for growing ones, infinite on the boundary.
    pub quality: f64,
    /// Whether the pole decays (Re s < 0).
    pub stable: bool,
}

impl PoleZeroModel {
    /// Evaluates the model at a complex frequency s.
    pub fn evaluate(&self, s: Complex64) -> Complex64 {
        let numerator: Complex64 = self.zeros.iter().map(|z| s - z).product();
        let denominator: Complex64 = self.poles.iter().map(|p| s - p).product();
        self.gain * numerator / denominator
    }

    /// Per-pole stability summaries, sorted by natural frequency.
    pub fn pole_reports(&self) -> Vec<PoleReport> {
        let mut reports: Vec<PoleReport> = self
            .poles
            .iter()
            .map(|pole| {
                let magnitude = pole.norm();
                let quality = if pole.re == 0.0 {
                    f64::INFINITY
                } else {
                    -magnitude / (2.0 * pole.re)
                };
                PoleReport {
                    natural_frequency: magnitude / std::f64::consts::TAU,
                    quality,
                    stable: pole.re < 0.0,
                }
            })
            .collect();
        reports.sort_by(|a, b| a.natural_frequency.total_cmp(&b.natural_frequency));
        reports
    }

    /// Whether any pole fails to decay (Re s ≥ 0).
    pub fn has_unstable_pole(&self) -> bool {
        self.poles.iter().any(|pole| pole.re >= 0.0)
    }
}

/// Fits `num_zeros` zeros and `num_poles` poles to the samples with
/// [`FitOptions::default`].
pub fn fit_rational(
    samples: &ComplexResponse,
    num_zeros: usize,
    num_poles: usize,
) -> Result<PoleZeroModel> {
    fit_rational_with(samples, num_zeros, num_poles, &FitOptions::default())
}

/// Fits `num_zeros` zeros and `num_poles` poles to the samples.
///
/// Requires num_poles ≥ num_zeros (a proper response), at least
/// num_zeros + num_poles + 2 samples, and a grid spanning at least one
/// decade; the iteration cannot anchor both ends of the response on a
/// narrower window. Fails with [`Error::FitFailed`] when the converged
/// model misses any sample by more than `residual_bound` times the peak
/// magnitude.
pub fn fit_rational_with(
    samples: &ComplexResponse,
    num_zeros: usize,
    num_poles: usize,
    options: &FitOptions,
) -> Result<PoleZeroModel> {
    if num_poles < num_zeros {
        return Err(Error::FitFailed(format!(
            "improper model: {num_zeros} zeros exceed {num_poles} poles"
        )));
    }
    if samples.len() < num_zeros + num_poles + 2 {
        return Err(Error::FitFailed(format!(
            "{} samples cannot pin {} zeros and {} poles",
            samples.len(),
            num_zeros,
            num_poles
        )));
    }
    let omegas = samples.omegas();
    let omega_min = omegas[0];
    let omega_max = omegas[omegas.len() - 1];
    if omega_max < 10.0 * omega_min {
        return Err(Error::FitFailed(format!(
            "grid spans {omega_min} to {omega_max} rad/s, less than a decade"
        )));
    }
    let peak = samples
        .values()
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::FitFailed("all samples are zero".into()));
    }

    let scale = (omega_min * omega_max).sqrt();
    let sigmas: Vec<Complex64> = omegas
        .iter()
        .map(|&omega| Complex64::new(0.0, omega / scale))
        .collect();
    let floor = options.weight_floor * peak;

    let num_unknowns = num_zeros + 1 + num_poles;
    let mut numerator = vec![0.0; num_zeros + 1];
    let mut denominator = vec![1.0];
    let mut previous_poles: Option<Vec<Complex64>> = None;

    for _ in 0..options.max_iterations.max(1) {
        let mut matrix = DMatrix::<f64>::zeros(2 * samples.len(), num_unknowns);
        let mut rhs = DVector::<f64>::zeros(2 * samples.len());
        for (k, (&sigma, &value)) in sigmas.iter().zip(samples.values()).enumerate() {
            let weight = 1.0
                / (value.norm().max(floor) * evaluate_poly(&denominator, sigma).norm().max(1e-300));
            let mut power = Complex64::new(weight, 0.0);
            for i in 0..=num_zeros {
                matrix[(2 * k, i)] = power.re;
                matrix[(2 * k + 1, i)] = power.im;
                power *= sigma;
            }
            let mut power = sigma * weight;
            for j in 0..num_poles {
                let entry = -value * power;
                matrix[(2 * k, num_zeros + 1 + j)] = entry.re;
                matrix[(2 * k + 1, num_zeros + 1 + j)] = entry.im;
                power *= sigma;
            }
            let target = value * weight;
            rhs[2 * k] = target.re;
            rhs[2 * k + 1] = target.im;
        }

        let solution = matrix
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|message| {
                Error::FitFailed(format!("least-squares solve failed: {message}"))
            })?;

        numerator = solution.as_slice()[..=num_zeros].to_vec();
        denominator = std::iter::once(1.0)
            .chain(solution.as_slice()[num_zeros + 1..].iter().copied())
            .collect();

        let poles = poly_roots(&denominator);
        if let Some(previous) = &previous_poles {
            let movement = poles
                .iter()
                .map(|pole| {
                    previous
                        .iter()
                        .map(|old| (pole - old).norm())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            if movement < 1e-9 {
                break;
            }
        }
        previous_poles = Some(poles);
    }

    let mut model = assemble_model(
        &numerator,
        &denominator,
        scale,
        options.trust_factor * omega_max,
    )?;

    let mut residual: f64 = 0.0;
    for (&omega, &value) in omegas.iter().zip(samples.values()) {
        let misfit = (model.evaluate(Complex64::new(0.0, omega)) - value).norm();
        residual = residual.max(misfit / peak);
    }
    if !residual.is_finite() || residual > options.residual_bound {
        return Err(Error::FitFailed(format!(
            "converged model misses the samples: residual {residual:.3e} exceeds {:.3e}",
            options.residual_bound
        )));
    }
    model.fit_residual = residual;
    Ok(model)
}

/// Builds the pole-zero form from coefficient vectors in the scaled
/// variable, dropping roots outside the trust radius and folding their
/// in-band contribution into the gain.
fn assemble_model(
    numerator: &[f64],
    denominator: &[f64],
    scale: f64,
    trust_radius: f64,
) -> Result<PoleZeroModel> {
    let (zeros_scaled, numerator_lead, numerator_degree) = rooted_form(numerator);
    let (poles_scaled, denominator_lead, denominator_degree) = rooted_form(denominator);
    if numerator_lead == 0.0 || denominator_lead == 0.0 {
        return Err(Error::FitFailed(
            "fit collapsed to a zero polynomial".into(),
        ));
    }

    let mut gain = Complex64::new(
        (numerator_lead / denominator_lead)
            * scale.powi(denominator_degree as i32 - numerator_degree as i32),
        0.0,
    );
    let mut zeros = Vec::new();
    for root in zeros_scaled {
        let z = root * scale;
        if z.norm() <= trust_radius {
            zeros.push(z);
        } else {
            gain *= -z;
        }
    }
    let mut poles = Vec::new();
    for root in poles_scaled {
        let p = root * scale;
        if p.norm() <= trust_radius {
            poles.push(p);
        } else {
            gain /= -p;
        }
    }
    if !gain.re.is_finite() {
        return Err(Error::FitFailed(
            "non-finite gain after root pruning".into(),
        ));
    }

    let order =
        |a: &Complex64, b: &Complex64| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im));
    zeros.sort_by(order);
    poles.sort_by(order);
    Ok(PoleZeroModel {
        zeros,
        poles,
        gain: gain.re,
        fit_residual: f64::NAN,
    })
}

/// Roots, leading coefficient, and effective degree of a real polynomial
/// c₀ + c₁x + …, ignoring trailing coefficients below 1e-14 of the largest.
fn rooted_form(coefficients: &[f64]) -> (Vec<Complex64>, f64, usize) {
    let largest = coefficients.iter().fold(0.0, |a: f64, &c| a.max(c.abs()));
    let mut effective = coefficients.len();
    while effective > 1 && coefficients[effective - 1].abs() <= 1e-14 * largest {
        effective -= 1;
    }
    let trimmed = &coefficients[..effective];
    (
        poly_roots(trimmed),
        trimmed[trimmed.len() - 1],
        trimmed.len() - 1,
    )
}

/// Roots of a real polynomial c₀ + c₁x + … + c_m·x^m with c_m ≠ 0, via the
/// eigenvalues of its companion matrix. Roots with relatively negligible
/// imaginary part are snapped onto the real axis.
fn poly_roots(coefficients: &[f64]) -> Vec<Complex64> {
    let degree = coefficients.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coefficients[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for row in 1..degree {
        companion[(row, row - 1)] = 1.0;
    }
    for row in 0..degree {
        companion[(row, degree - 1)] = -coefficients[row] / lead;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|&root| {
            if root.im.abs() <= 1e-12 * root.norm() {
                Complex64::new(root.re, 0.0)
            } else {
                root
            }
        })
        .collect()
}

fn evaluate_poly(coefficients: &[f64], x: Complex64) -> Complex64 {
    coefficients
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(omega_min: f64, omega_max: f64, points: usize) -> Vec<f64> {
        let ratio = (omega_max / omega_min).ln();
        (0..points)
            .map(|i| omega_min * (ratio * i as f64 / (points - 1) as f64).exp())
            .collect()
    }

    /// s / (((s+1)² + 100)·((s+2)² + 400)): one zero at the origin, pole
    /// pairs at −1 ± 10i and −2 ± 20i.
    fn planted_response(s: Complex64) -> Complex64 {
        s / (((s + 1.0) * (s + 1.0) + 100.0) * ((s + 2.0) * (s + 2.0) + 400.0))
    }

    fn planted_samples() -> ComplexResponse {
        let omegas = log_grid(0.5, 100.0, 200);
        let values = omegas
            .iter()
            .map(|&omega| planted_response(Complex64::new(0.0, omega)))
            .collect();
        ComplexResponse::new(omegas, values).unwrap()
    }

    fn assert_contains_pole(model: &PoleZeroModel, expected: Complex64, tol: f64) {
        let closest = model
            .poles
            .iter()
            .map(|p| (p - expected).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(
            closest <= tol * expected.norm(),
            "no pole within {tol:e} of {expected}, have {:?}",
            model.poles
        );
    }

    #[test]
    fn recovers_a_planted_model() {
        let model = fit_rational(&planted_samples(), 1, 4).unwrap();
        assert_eq!(model.zeros.len(), 1);
        assert_eq!(model.poles.len(), 4);
        assert!(model.zeros[0].norm() < 1e-8);
        assert_contains_pole(&model, Complex64::new(-1.0, 10.0), 1e-6);
        assert_contains_pole(&model, Complex64::new(-1.0, -10.0), 1e-6);
        assert_contains_pole(&model, Complex64::new(-2.0, 20.0), 1e-6);
        assert_contains_pole(&model, Complex64::new(-2.0, -20.0), 1e-6);
        assert!((model.gain - 1.0).abs() < 1e-7);
        assert!(model.fit_residual < 1e-9);
        assert!(!model.has_unstable_pole());
    }

    #[test]
    fn fitted_complex_poles_pair_up() {
        let model = fit_rational(&planted_samples(), 1, 4).unwrap();
        for pole in model.poles.iter().filter(|p| p.im != 0.0) {
            let partner = model
                .poles
                .iter()
                .map(|q| (q - pole.conj()).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(partner <= 1e-9 * pole.norm());
        }
    }

    #[test]
    fn refitting_model_output_is_idempotent() {
        let first = fit_rational(&planted_samples(), 1, 4).unwrap();
        let omegas = log_grid(0.5, 100.0, 200);
        let values = omegas
            .iter()
            .map(|&omega| first.evaluate(Complex64::new(0.0, omega)))
            .collect();
        let second = fit_rational(&ComplexResponse::new(omegas, values).unwrap(), 1, 4).unwrap();
        for (a, b) in first.poles.iter().zip(&second.poles) {
            assert!((a - b).norm() <= 1e-8 * a.norm());
        }
        assert!((first.gain - second.gain).abs() <= 1e-8 * first.gain.abs());
    }

    #[test]
    fn excess_poles_are_pruned_into_the_gain() {
        // Fitting 6 poles to a 4-pole truth leaves a spurious far pair (or a
        // near-cancelling dipole); either way the reported model must still
        // reproduce the data.
        let model = fit_rational(&planted_samples(), 1, 6).unwrap();
        assert!(model.fit_residual < 1e-6);
        let probe = Complex64::new(0.0, 7.0);
        let truth = planted_response(probe);
        assert!((model.evaluate(probe) - truth).norm() <= 1e-6 * truth.norm());
    }

    #[test]
    fn report_orders_and_classifies_poles() {
        let model = PoleZeroModel {
            zeros: vec![],
            poles: vec![
                Complex64::new(1.0, 20.0),
                Complex64::new(-3.0, 4.0),
                Complex64::new(0.0, 2.0),
            ],
            gain: 1.0,
            fit_residual: 0.0,
        };
        let reports = model.pole_reports();
        assert_eq!(reports.len(), 3);
        assert!(reports[0].natural_frequency < reports[1].natural_frequency);
        // |s| = 2 pole: marginal.
        assert!(!reports[0].stable);
        assert!(reports[0].quality.is_infinite());
        // |s| = 5 pole: stable with Q = 5/6.
        assert!(reports[1].stable);
        assert!((reports[1].quality - 5.0 / 6.0).abs() < 1e-12);
        // |s| ≈ 20 pole: growing, negative quality.
        assert!(!reports[2].stable);
        assert!(reports[2].quality < 0.0);
        assert!(model.has_unstable_pole());
    }

    #[test]
    fn rejects_degenerate_requests() {
        let samples = planted_samples();
        assert!(fit_rational(&samples, 4, 1).is_err());
        let omegas = log_grid(0.5, 100.0, 4);
        let values = omegas
            .iter()
            .map(|&omega| planted_response(Complex64::new(0.0, omega)))
            .collect();
        let too_few = ComplexResponse::new(omegas, values).unwrap();
        assert!(fit_rational(&too_few, 1, 4).is_err());

        let narrow_omegas = log_grid(10.0, 50.0, 50);
        let narrow_values = narrow_omegas
            .iter()
            .map(|&omega| planted_response(Complex64::new(0.0, omega)))
            .collect();
        let narrow = ComplexResponse::new(narrow_omegas, narrow_values).unwrap();
        assert!(matches!(
            fit_rational(&narrow, 1, 4),
            Err(Error::FitFailed(_))
        ));
    }

    #[test]
    fn rejects_an_unfittable_response() {
        // |T| = const but with a phase no 1-pole model can carry.
        let omegas = log_grid(1.0, 1000.0, 60);
        let values = omegas
            .iter()
            .map(|&omega| Complex64::from_polar(1.0, (omega.ln()).sin() * 3.0))
            .collect();
        let samples = ComplexResponse::new(omegas, values).unwrap();
        assert!(matches!(
            fit_rational(&samples, 0, 1),
            Err(Error::FitFailed(_))
        ));
    }
}
