//! Physical constants (CODATA 2018 exact/recommended values).

use std::f64::consts::PI;

/// Constants used throughout the crate.
///
/// Spectral quantities are carried in eV, so the conversions that matter are
/// `hbar_c` (eV·nm) and `k_b` (eV/K). SI values are used for forces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// ħc in eV·nm.
    pub hbar_c: f64,
    /// Boltzmann constant in eV/K.
    pub k_b: f64,
    /// Vacuum permittivity in F/m.
    pub epsilon_0: f64,
    /// Speed of light in m/s.
    pub c: f64,
    /// Elementary charge in C (J per eV).
    pub e: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar_c: 197.326_980_459_302_47,
    k_b: 8.617_333_262_145_178e-5,
    epsilon_0: 8.854_187_812_8e-12,
    c: 299_792_458.0,
    e: 1.602_176_634e-19,
};

impl PhysicalConstants {
    /// ħc in J·m.
    pub fn hbar_c_si(&self) -> f64 {
        self.hbar_c * 1e-9 * self.e
    }

    /// Converts an imaginary frequency given as an energy (eV) into a
    /// wavenumber ξ/c in 1/m.
    pub fn ev_to_wavenumber(&self, xi_ev: f64) -> f64 {
        xi_ev / (self.hbar_c * 1e-9)
    }

    /// k_B·T in joules.
    pub fn thermal_energy_j(&self, temperature: f64) -> f64 {
        self.k_b * temperature * self.e
    }

    /// First Matsubara frequency ħξ₁ = 2π k_B T in eV.
    pub fn matsubara_step_ev(&self, temperature: f64) -> f64 {
        2.0 * PI * self.k_b * temperature
    }
}
