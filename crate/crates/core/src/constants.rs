//! Physical constants, pinned so numerical results are bit-reproducible.

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum (m/s), exact by definition.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
