//! Physical constants (CODATA 2018 recommended values, SI units).
//!
//! The 2019 SI redefinition made `ELEMENTARY_CHARGE`, `PLANCK`,
//! `BOLTZMANN` and `SPEED_OF_LIGHT` exact; the rest carry CODATA 2018
//! standard uncertainties in the last quoted digits.

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Planck constant, J s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant, J s. `PLANCK / 2π` to the digits CODATA quotes.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Electron rest mass, kg. CODATA 2018, u = 2.8e-40 kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Vacuum permittivity, F/m. CODATA 2018, u = 1.3e-21 F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Electron volt, J (exact, equals the elementary charge).
pub const ELECTRON_VOLT: f64 = ELEMENTARY_CHARGE;

/// Bohr radius of ordinary hydrogen, m. Used only as an independent
/// cross-check of the surface-state Bohr radius in tests.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

/// `e² / (4π ε₀)`, the Coulomb coupling that replaces Gaussian `e²` in SI.
pub fn coulomb_e2() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE
        / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY)
}
