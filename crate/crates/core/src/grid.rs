//! Angular-frequency sampling grids.
//!
//! Kernels are exact functions of frequency; grids exist only for sweeps,
//! fits, and file output.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Strictly increasing, strictly positive angular frequencies (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    /// Validates and wraps a list of angular frequencies (rad/s).
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        for &omega in &omegas {
            if !omega.is_finite() {
                return Err(Error::InvalidGrid(format!("non-finite frequency {omega}")));
            }
            if omega <= 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "non-positive frequency {omega} rad/s"
                )));
            }
        }
        if omegas.windows(2).any(|pair| pair[0] >= pair[1]) {
            return Err(Error::InvalidGrid(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self { omegas })
    }

    /// Log-spaced grid between two ordinary frequencies in hertz, endpoints
    /// included.
    pub fn log_spaced_hz(f_min_hz: f64, f_max_hz: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidGrid(format!(
                "log-spaced grid needs at least 2 points, got {points}"
            )));
        }
        if !(f_min_hz.is_finite() && f_max_hz.is_finite())
            || f_min_hz <= 0.0
            || f_max_hz <= f_min_hz
        {
            return Err(Error::InvalidGrid(format!(
                "log-spaced grid needs 0 < f_min < f_max, got [{f_min_hz}, {f_max_hz}] Hz"
            )));
        }
        let log_min = f_min_hz.ln();
        let log_max = f_max_hz.ln();
        let step = (log_max - log_min) / (points - 1) as f64;
        let omegas = (0..points)
            .map(|i| TAU * (log_min + step * i as f64).exp())
            .collect();
        Self::new(omegas)
    }

    /// Angular frequencies in rad/s.
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Iterates over the angular frequencies (rad/s).
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.omegas.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_grid() {
        assert!(FrequencyGrid::new(Vec::new()).is_err());
    }

    #[test]
    fn rejects_unsorted_and_nonpositive() {
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![2.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let grid = FrequencyGrid::log_spaced_hz(1.0, 100.0, 3).unwrap();
        let omegas = grid.omegas();
        assert_eq!(omegas.len(), 3);
        assert!((omegas[0] - TAU).abs() < 1e-12 * TAU);
        assert!((omegas[1] - 10.0 * TAU).abs() < 1e-12 * 10.0 * TAU);
        assert!((omegas[2] - 100.0 * TAU).abs() < 1e-12 * 100.0 * TAU);
    }

    #[test]
    fn log_spacing_validates_bounds() {
        assert!(FrequencyGrid::log_spaced_hz(0.0, 10.0, 5).is_err());
        assert!(FrequencyGrid::log_spaced_hz(10.0, 10.0, 5).is_err());
        assert!(FrequencyGrid::log_spaced_hz(1.0, 10.0, 1).is_err());
    }
}
