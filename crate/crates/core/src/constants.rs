//! Physical constants (CODATA 2018), SI units.

/// Reduced Planck constant ħ (J·s)
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant k_B (J/K)
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum c (m/s)
pub const C_LIGHT: f64 = 2.997_924_58e8;

/// Vacuum permittivity ε₀ (F/m)
pub const EPSILON_0: f64 = 8.854_187_8128e-12;

/// Atomic mass unit (kg)
pub const AMU: f64 = 1.660_539_066_60e-27;
