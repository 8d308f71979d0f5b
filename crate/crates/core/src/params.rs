//! Cavity, species and laser parameters plus every quantity derived from them.
//!
//! Unit convention used throughout the crate:
//!
//! * the free spectral range `δ` is an ordinary frequency in **Hz**;
//! * `κ`, `g0`, `U0`, `Γ` and all detunings are **angular** rates in rad/s;
//! * field amplitudes are dimensionless and photon-number normalized, so
//!   `|α|²` is the intracavity photon number of a mode.
//!
//! With `δ` in Hz, `κ = πδ/F` comes out in rad/s. All Hz/rad-s conversions
//! happen in this module.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{self, C, EPSILON_0, HBAR, K_B};
use crate::error::{CarlError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    /// Round-trip length `L` [m].
    pub round_trip_length: f64,
    /// Vertical waist `w_v` [m].
    pub waist_v: f64,
    /// Horizontal waist `w_h` [m].
    pub waist_h: f64,
    pub finesse: f64,
    /// Transmission of the outcoupling mirror.
    pub mirror_transmission: f64,
}

impl CavityGeometry {
    /// Geometric-mean waist `w0 = sqrt(w_v w_h)`.
    pub fn mean_waist(&self) -> f64 {
        (self.waist_v * self.waist_h).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        positive("round_trip_length", self.round_trip_length)?;
        positive("waist_v", self.waist_v)?;
        positive("waist_h", self.waist_h)?;
        if !(self.finesse >= 1.0 && self.finesse.is_finite()) {
            return Err(CarlError::invalid("finesse", format!("must be >= 1, got {}", self.finesse)));
        }
        let t = self.mirror_transmission;
        if !(t > 0.0 && t < 1.0) {
            return Err(CarlError::invalid("mirror_transmission", format!("must lie in (0, 1), got {t}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    /// Mass [kg].
    pub mass: f64,
    /// Natural linewidth of the D2 line [rad/s].
    pub linewidth: f64,
    /// D1 resonance [rad/s].
    pub omega_d1: f64,
    /// D2 resonance [rad/s].
    pub omega_d2: f64,
    /// Elastic collision cross section [m^2].
    pub collision_cross_section: f64,
}

impl AtomSpecies {
    pub fn rubidium85() -> Self {
        AtomSpecies {
            mass: constants::RB85_MASS,
            linewidth: constants::RB85_GAMMA_D2,
            omega_d1: constants::RB85_OMEGA_D1,
            omega_d2: constants::RB85_OMEGA_D2,
            collision_cross_section: constants::RB85_COLLISION_CROSS_SECTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("linewidth", self.linewidth)?;
        positive("omega_d1", self.omega_d1)?;
        positive("omega_d2", self.omega_d2)?;
        positive("collision_cross_section", self.collision_cross_section)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserConfig {
    /// Laser angular frequency `ω` [rad/s].
    pub omega: f64,
    /// Wavenumber `k = ω/c` [1/m].
    pub wavenumber: f64,
    /// Power coupled into the pumped mode [W].
    pub input_power: f64,
    /// `ω − ω_D1` [rad/s], negative for red detuning.
    pub detuning_d1: f64,
    /// `ω − ω_D2` [rad/s].
    pub detuning_d2: f64,
    /// Detuning from the nearest resonance [rad/s].
    pub detuning_atomic: f64,
    /// Laser detuning from the empty-cavity resonance [rad/s].
    pub detuning_cavity: f64,
}

impl LaserConfig {
    /// Builds a laser `detuning_d1` away from the D1 line of `species`.
    pub fn detuned_from_d1(species: &AtomSpecies, detuning_d1: f64, input_power: f64) -> Self {
        let omega = species.omega_d1 + detuning_d1;
        Self::at_frequency(species, omega, input_power)
    }

    pub fn at_frequency(species: &AtomSpecies, omega: f64, input_power: f64) -> Self {
        let detuning_d1 = omega - species.omega_d1;
        let detuning_d2 = omega - species.omega_d2;
        let detuning_atomic =
            if detuning_d1.abs() <= detuning_d2.abs() { detuning_d1 } else { detuning_d2 };
        LaserConfig {
            omega,
            wavenumber: omega / C,
            input_power,
            detuning_d1,
            detuning_d2,
            detuning_atomic,
            detuning_cavity: 0.0,
        }
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.wavenumber
    }

    pub fn validate(&self) -> Result<()> {
        positive("omega", self.omega)?;
        positive("wavenumber", self.wavenumber)?;
        let rel = (self.wavenumber - self.omega / C).abs() / self.wavenumber;
        if rel > 1e-9 {
            return Err(CarlError::invalid("wavenumber", format!("k must equal omega/c (relative mismatch {rel:e})")));
        }
        if !(self.input_power >= 0.0 && self.input_power.is_finite()) {
            return Err(CarlError::invalid("input_power", "must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub geometry: CavityGeometry,
    pub species: AtomSpecies,
    pub laser: LaserConfig,
}

impl PhysicalParams {
    /// Rb-85 in the 85 mm, F = 80000 ring cavity, 2π×1 THz red of D1,
    /// with the input power chosen for 10 W circulating.
    pub fn rb85_paper() -> Self {
        let geometry = CavityGeometry {
            round_trip_length: 0.085,
            waist_v: 129e-6,
            waist_h: 124e-6,
            finesse: 80_000.0,
            mirror_transmission: 2e-6,
        };
        let species = AtomSpecies::rubidium85();
        // resonant buildup is F/π
        let input_power = 10.0 * PI / geometry.finesse;
        let laser = LaserConfig::detuned_from_d1(&species, constants::angular(-1e12), input_power);
        PhysicalParams { geometry, species, laser }
    }

    /// Same as [`Self::rb85_paper`] with the p-polarization finesse.
    pub fn rb85_low_finesse() -> Self {
        let mut p = Self::rb85_paper();
        p.geometry.finesse = 2500.0;
        p
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "rb85-paper" => Some(Self::rb85_paper()),
            "rb85-low-finesse" => Some(Self::rb85_low_finesse()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.species.validate()?;
        self.laser.validate()
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        DerivedParams::compute(self)
    }

    /// Moves the laser to a new D1 detuning, keeping the other settings.
    pub fn with_detuning_d1(mut self, detuning_d1: f64) -> Self {
        let power = self.laser.input_power;
        let cavity = self.laser.detuning_cavity;
        self.laser = LaserConfig::detuned_from_d1(&self.species, detuning_d1, power);
        self.laser.detuning_cavity = cavity;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Free spectral range `δ` [Hz].
    pub free_spectral_range: f64,
    /// Amplitude decay rate `κ` [rad/s].
    pub kappa: f64,
    pub mode_volume: f64,
    /// Single-photon Rabi frequency `g0` [rad/s].
    pub g0: f64,
    /// One-photon light shift `U0` [rad/s].
    pub u0: f64,
    /// Spontaneous-scattering coefficient `γ0` [1/s].
    pub gamma0: f64,
    /// Recoil constant `ε = ħk²/m` [rad/s].
    pub recoil: f64,
    /// Pump amplitude rate `η+` [1/s].
    pub pump_rate: f64,
}

impl DerivedParams {
    pub fn compute(p: &PhysicalParams) -> Result<Self> {
        p.validate()?;
        let free_spectral_range = free_spectral_range(&p.geometry)?;
        let kappa = cavity_decay_rate(free_spectral_range, p.geometry.finesse)?;
        let mode_volume = mode_volume(&p.geometry);
        let g0 = coupling_constant(&p.species, &p.laser, mode_volume)?;
        let u0 = one_photon_light_shift(g0, p.laser.detuning_d1, p.laser.detuning_d2)?;
        let gamma0 =
            spontaneous_rate_coefficient(g0, p.species.linewidth, p.laser.detuning_d1, p.laser.detuning_d2)?;
        let recoil = HBAR * p.laser.wavenumber.powi(2) / p.species.mass;
        let pump_rate = pump_rate(p.laser.input_power, p.laser.omega, free_spectral_range, kappa)?;
        Ok(DerivedParams { free_spectral_range, kappa, mode_volume, g0, u0, gamma0, recoil, pump_rate })
    }

    /// Resonant power buildup `δ/κ` of the circulating over the incident power.
    pub fn buildup(&self) -> f64 {
        self.free_spectral_range / self.kappa
    }
}

/// Trap figures for a given circulating power, reported next to [`DerivedParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapProperties {
    pub intracavity_power: f64,
    pub intracavity_photons: f64,
    /// Running-wave potential depth `ħU0|α+|²` [J] (negative when attractive).
    pub depth: f64,
    /// Depth expressed as a temperature [K].
    pub depth_kelvin: f64,
    pub radial_frequency: f64,
    pub axial_frequency: f64,
    /// Spontaneous scattering rate `γ0 |α+|²` [1/s].
    pub scattering_rate: f64,
}

impl TrapProperties {
    /// Trap at the circulating power reached on resonance from `laser.input_power`.
    pub fn compute(p: &PhysicalParams, d: &DerivedParams) -> Result<Self> {
        Self::at_power(p, d, p.laser.input_power * d.buildup())
    }

    pub fn at_power(p: &PhysicalParams, d: &DerivedParams, intracavity_power: f64) -> Result<Self> {
        let photons = intracavity_photons(intracavity_power, p.laser.omega, d.free_spectral_range);
        let depth = dipole_potential(0.0, photons.sqrt().into(), 0.0.into(), d.u0, p.laser.wavenumber);
        let (radial_frequency, axial_frequency) =
            trap_frequencies_from_depth(depth, p.species.mass, p.geometry.mean_waist(), p.laser.wavenumber)?;
        Ok(TrapProperties {
            intracavity_power,
            intracavity_photons: photons,
            depth,
            depth_kelvin: depth / K_B,
            radial_frequency,
            axial_frequency,
            scattering_rate: d.gamma0 * photons,
        })
    }
}

/// `δ = c/L` in Hz.
pub fn free_spectral_range(geometry: &CavityGeometry) -> Result<f64> {
    if !(geometry.round_trip_length > 0.0) {
        return Err(CarlError::invalid("round_trip_length", "must be positive"));
    }
    Ok(C / geometry.round_trip_length)
}

/// `κ = πδ/F`, with `δ` in Hz and `κ` in rad/s.
pub fn cavity_decay_rate(fsr_hz: f64, finesse: f64) -> Result<f64> {
    if !(finesse >= 1.0) {
        return Err(CarlError::invalid("finesse", format!("must be >= 1, got {finesse}")));
    }
    Ok(PI * fsr_hz / finesse)
}

/// `V = (π/2) L w_v w_h`.
pub fn mode_volume(geometry: &CavityGeometry) -> f64 {
    0.5 * PI * geometry.round_trip_length * geometry.waist_v * geometry.waist_h
}

/// `g0 = d E1 / ħ` with `E1 = sqrt(ħω/2ε0V)` and `d = sqrt(3πε0ħΓ/k³)`.
///
/// The dipole moment uses the D2 wavenumber (the line `Γ` belongs to); the
/// field per photon uses the laser frequency.
pub fn coupling_constant(species: &AtomSpecies, laser: &LaserConfig, mode_volume: f64) -> Result<f64> {
    positive("mode_volume", mode_volume)?;
    let k_atom = species.omega_d2 / C;
    let dipole = (3.0 * PI * EPSILON_0 * HBAR * species.linewidth / k_atom.powi(3)).sqrt();
    let field_per_photon = (HBAR * laser.omega / (2.0 * EPSILON_0 * mode_volume)).sqrt();
    Ok(dipole * field_per_photon / HBAR)
}

/// `U = g²(1/Δ_D1 + 2/Δ_D2)`. An infinite detuning switches its line off.
pub fn one_photon_light_shift(g: f64, detuning_d1: f64, detuning_d2: f64) -> Result<f64> {
    nonzero_detuning(detuning_d1, detuning_d2)?;
    Ok(g * g * (1.0 / detuning_d1 + 2.0 / detuning_d2))
}

/// `γ = g²Γ(1/Δ_D1² + 2/Δ_D2²)`; the scattering rate out of one beam is `γ|α+|²`.
pub fn spontaneous_rate_coefficient(g: f64, linewidth: f64, detuning_d1: f64, detuning_d2: f64) -> Result<f64> {
    nonzero_detuning(detuning_d1, detuning_d2)?;
    Ok(g * g * linewidth * (detuning_d1.powi(-2) + 2.0 * detuning_d2.powi(-2)))
}

/// `φ = ħU|α+ e^{ikx} + α− e^{−ikx}|²` [J].
pub fn dipole_potential(
    x: f64,
    alpha_plus: num_complex::Complex64,
    alpha_minus: num_complex::Complex64,
    u: f64,
    k: f64,
) -> f64 {
    let phase = num_complex::Complex64::from_polar(1.0, k * x);
    HBAR * u * (alpha_plus * phase + alpha_minus * phase.conj()).norm_sqr()
}

/// Harmonic approximation of the running-wave trap at the circulating power
/// implied by `params`. Returns `(ω_r, ω_z)` in rad/s.
pub fn harmonic_trap_frequencies(params: &PhysicalParams) -> Result<(f64, f64)> {
    let d = params.derive()?;
    let t = TrapProperties::compute(params, &d)?;
    Ok((t.radial_frequency, t.axial_frequency))
}

/// `ω_r = sqrt(4|φ0|/(m w0²))`, `ω_z = sqrt(8|φ0|/(m k² w0⁴))` for an
/// attractive depth `φ0 < 0`.
pub fn trap_frequencies_from_depth(depth: f64, mass: f64, waist: f64, k: f64) -> Result<(f64, f64)> {
    if !(depth < 0.0) {
        return Err(CarlError::NoConfinement { depth });
    }
    let d = depth.abs();
    let radial = (4.0 * d / (mass * waist * waist)).sqrt();
    let axial = (8.0 * d / (mass * k * k * waist.powi(4))).sqrt();
    Ok((radial, axial))
}

/// Intracavity photon number `P/(ħωδ)` for circulating power `P`.
pub fn intracavity_photons(power: f64, omega: f64, fsr_hz: f64) -> f64 {
    power / (HBAR * omega * fsr_hz)
}

/// `η+ = sqrt(δκ) α_in` with `|α_in|² = P_in/(ħωδ)`.
pub fn pump_rate(input_power: f64, omega: f64, fsr_hz: f64, kappa: f64) -> Result<f64> {
    if !(input_power >= 0.0) {
        return Err(CarlError::invalid("input_power", "must be non-negative"));
    }
    let alpha_in = intracavity_photons(input_power, omega, fsr_hz).sqrt();
    Ok((fsr_hz * kappa).sqrt() * alpha_in)
}

/// Inverse of [`pump_rate`]: input power needed for pump rate `eta`.
pub fn input_power_for_pump_rate(eta: f64, omega: f64, kappa: f64) -> f64 {
    // η² = δκ P/(ħωδ) = κP/(ħω)
    eta * eta * HBAR * omega / kappa
}

/// `γ_coll = nσ v̄ / 2` with `v̄ = sqrt(k_B T/m)`.
pub fn collision_rate(density: f64, cross_section: f64, temperature: f64, mass: f64) -> f64 {
    density * cross_section * (K_B * temperature / mass).sqrt() / 2.0
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CarlError::invalid(name, format!("must be finite and positive, got {v}")))
    }
}

fn nonzero_detuning(d1: f64, d2: f64) -> Result<()> {
    if d1 == 0.0 || d2 == 0.0 || d1.is_nan() || d2.is_nan() {
        return Err(CarlError::Singularity("zero detuning in light-shift weights"));
    }
    Ok(())
}
