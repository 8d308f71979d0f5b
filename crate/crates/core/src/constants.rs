//! Physical constants (CODATA 2018, exact where SI defines them) and species presets.

use std::f64::consts::PI;

/// Speed of light in vacuum [m/s].
pub const C: f64 = 299_792_458.0;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_813e-12;
/// Atomic mass unit [kg].
pub const AMU: f64 = 1.660_539_067e-27;

/// Rubidium-85 mass [kg].
pub const RB85_MASS: f64 = 84.911_789_74 * AMU;
/// Rubidium-85 D2 natural linewidth [rad/s].
pub const RB85_GAMMA_D2: f64 = 2.0 * PI * 6.0666e6;
/// Rubidium-85 D1 transition frequency [rad/s].
pub const RB85_OMEGA_D1: f64 = 2.0 * PI * 377.107_385_690e12;
/// Rubidium-85 D2 transition frequency [rad/s].
pub const RB85_OMEGA_D2: f64 = 2.0 * PI * 384.230_406_373e12;
/// Elastic collision cross section for cold Rb [m^2] (1e-12 cm^2).
pub const RB85_COLLISION_CROSS_SECTION: f64 = 1e-16;

/// Angular frequency [rad/s] from an ordinary frequency [Hz].
#[inline]
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Ordinary frequency [Hz] from an angular frequency [rad/s].
#[inline]
pub fn hertz(rad_per_s: f64) -> f64 {
    rad_per_s / (2.0 * PI)
}
