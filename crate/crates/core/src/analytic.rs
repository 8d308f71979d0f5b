//! Closed-form results for perfect bunching, radiation pressure and mirror
//! backscattering.
//!
//! The perfect-bunching laws are magnitude laws valid for `t ≫ 1/κ`; phases
//! follow the gauge where `η+` and `α+` are real.

use num_complex::Complex64;

use crate::constants::HBAR;
use crate::error::{CarlError, Result};

/// Minimum `κt` for which the long-time laws are reported as valid.
pub const LONG_TIME_FACTOR: f64 = 10.0;

/// A long-time estimate together with whether `κt ≥ 10` holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transient {
    pub value: f64,
    pub long_time: bool,
}

/// Parameters of the perfect-bunching laws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BunchedCarl {
    pub atom_number: f64,
    pub u0: f64,
    pub pump: f64,
    pub kappa: f64,
    /// `ε = ħk²/m`.
    pub recoil: f64,
}

impl BunchedCarl {
    pub fn probe_amplitude(&self, t: f64) -> Result<Transient> {
        let value = probe_amplitude_transient(self.atom_number, self.u0, self.pump, self.kappa, self.recoil, t)?;
        Ok(Transient { value, long_time: self.kappa * t >= LONG_TIME_FACTOR })
    }

    pub fn carl_frequency(&self, t: f64) -> Result<Transient> {
        let value = carl_frequency_transient(self.atom_number, self.u0, self.pump, self.kappa, self.recoil, t)?;
        Ok(Transient { value, long_time: self.kappa * t >= LONG_TIME_FACTOR })
    }

    /// `|α−|³ (kv)³ = N³U0³η+³/(8κ³)`, independent of `t`.
    pub fn invariant_product(&self) -> f64 {
        (self.atom_number * self.u0.abs() * self.pump / self.kappa).powi(3) / 8.0
    }
}

/// `α+ ≈ η+/κ`.
pub fn steady_pump_amplitude(pump: f64, kappa: f64) -> Result<f64> {
    if kappa == 0.0 {
        return Err(CarlError::Singularity("kappa = 0 in the pump steady state"));
    }
    Ok(pump / kappa)
}

/// `|α−| ≈ (N²U0η+/(24κ²εt))^{1/3}`, returned as a non-negative magnitude.
pub fn probe_amplitude_transient(atom_number: f64, u0: f64, pump: f64, kappa: f64, recoil: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(CarlError::Domain(format!("transient laws need t > 0, got {t}")));
    }
    let cube = atom_number * atom_number * (u0 * pump).abs() / (24.0 * kappa * kappa * recoil * t);
    Ok(cube.cbrt())
}

/// `kv ≈ (3εNU0²η+² t/κ)^{1/3}` [rad/s]. The beat note sits at `Δω = 2kv`.
pub fn carl_frequency_transient(atom_number: f64, u0: f64, pump: f64, kappa: f64, recoil: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(CarlError::Domain(format!("transient laws need t > 0, got {t}")));
    }
    let cube = 3.0 * recoil * atom_number * (u0 * pump).powi(2) * t / kappa;
    Ok(cube.cbrt())
}

/// Beat frequency `Δω = 2kv` for a Doppler shift `kv`.
pub fn beat_frequency(kv: f64) -> f64 {
    2.0 * kv
}

/// Displacement `x = 3Δω t/(8k)` accumulated under the cube-root law.
pub fn displacement(beat_frequency: f64, t: f64, k: f64) -> f64 {
    3.0 * beat_frequency * t / (8.0 * k)
}

/// Probe power above which the collective force beats radiation pressure,
/// `P_pump (γ0/2U0)²`.
pub fn radiation_pressure_dominance(gamma0: f64, u0: f64, pump_power: f64) -> Result<f64> {
    if u0 == 0.0 {
        return Err(CarlError::Singularity("U0 = 0 in the radiation-pressure comparison"));
    }
    Ok(pump_power * (gamma0 / (2.0 * u0)).powi(2))
}

/// Radiation-pressure force `2ħkγ0|α+|²` [N].
pub fn radiation_pressure_force(gamma0: f64, alpha_plus: f64, k: f64) -> f64 {
    2.0 * HBAR * k * gamma0 * alpha_plus * alpha_plus
}

/// Upper bound `4ħk|U0||α+||α−|` of the collective dipole force [N].
pub fn carl_force_bound(u0: f64, alpha_plus: f64, alpha_minus: f64, k: f64) -> f64 {
    4.0 * HBAR * k * u0.abs() * alpha_plus.abs() * alpha_minus.abs()
}

/// Stationary probe amplitude from fixed scatterers with `Δc = N_sU_s`:
/// `α− = −i (N_sU_s b_s/κ) α+`.
pub fn mirror_backscatter_steady(
    count: f64,
    strength: f64,
    bunching: Complex64,
    kappa: f64,
    alpha_plus: Complex64,
) -> Result<Complex64> {
    if !(kappa > 0.0) {
        return Err(CarlError::invalid("kappa", "must be positive"));
    }
    Ok(-Complex64::i() * (count * strength / kappa) * bunching * alpha_plus)
}
