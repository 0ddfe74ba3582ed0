//! Error type shared by every module of the library.

use thiserror::Error;

/// Errors raised by design validation, kernel evaluation, fitting,
/// root-finding, and simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A physical design parameter is out of range.
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    /// A frequency grid violates ordering, positivity, or finiteness.
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The closed-loop denominator vanished at this frequency, signalling a
    /// closed-loop pole sitting on the imaginary axis.
    #[error("singular loop denominator at omega = {omega} rad/s")]
    SingularLoop { omega: f64 },

    /// The measurement kernel vanishes at this frequency: the meter carries
    /// no position information and the position-noise density diverges.
    #[error("measurement blind at omega = {omega} rad/s: the measurement kernel vanishes")]
    MeasurementBlind { omega: f64 },

    /// Rational fitting did not produce an acceptable model.
    #[error("rational fit failed: {0}")]
    FitFailed(String),

    /// No sign change was found when bracketing a resonance.
    #[error("no resonance bracket below omega = {omega_max} rad/s")]
    NoResonanceBracket { omega_max: f64 },

    /// A sample or intermediate value was NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
