use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::{CarlError, Result};
use crate::params::{DerivedParams, PhysicalParams};

use super::state::phasor_sum;
use num_complex::Complex64;

/// How the laser–cavity detuning `Δc` is set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CavityDetuning {
    /// `Δc` cancels the collective shift, `Δc = N U0 + N_s U_s`.
    #[default]
    Collective,
    /// Fixed value [rad/s].
    Static { value: f64 },
    /// Servo emulation: `Δc = N U0 ⟨cos 2kx_n⟩`, re-evaluated at every call.
    Tracking,
}

/// Point-like backscatterers frozen on the mirror surfaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorScatterers {
    /// Represented number of scatterers `N_s`.
    pub count: f64,
    /// Scattering efficiency `U_s` [rad/s], same role as `U0` for atoms.
    pub strength: f64,
    /// Sampled scatterer positions [m].
    pub positions: Vec<f64>,
}

impl MirrorScatterers {
    /// Complex bunching `b_s` of the scatterer positions.
    pub fn bunching(&self, k: f64) -> Complex64 {
        phasor_sum(&self.positions, k) / self.positions.len() as f64
    }

    pub fn collective_strength(&self) -> f64 {
        self.count * self.strength
    }
}

/// Velocity-proportional molasses friction and the matching momentum diffusion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MolassesModel {
    /// Friction coefficient `γ_fr` [kg/s].
    pub friction: f64,
    /// Momentum diffusion `D` [kg² m²/s³], `⟨F(t)F(t')⟩ = 2D δ(t − t')`.
    pub diffusion: f64,
}

impl MolassesModel {
    /// Fluctuation–dissipation closure `D = γ_fr k_B T`.
    pub fn at_temperature(friction: f64, temperature: f64) -> Self {
        MolassesModel { friction, diffusion: friction * K_B * temperature }
    }

    /// Friction alone, no diffusion.
    pub fn frictional(friction: f64) -> Self {
        MolassesModel { friction, diffusion: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.friction >= 0.0 && self.friction.is_finite()) {
            return Err(CarlError::invalid("friction", "must be finite and non-negative"));
        }
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return Err(CarlError::invalid("diffusion", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Coefficients of the coupled atom–field equations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// `κ` [rad/s].
    pub kappa: f64,
    /// `U0` [rad/s].
    pub u0: f64,
    /// Pump rate `η+` [1/s], real in the locked gauge.
    pub pump: f64,
    /// Cavity wavenumber `k` [1/m].
    pub wavenumber: f64,
    /// Atomic mass [kg].
    pub mass: f64,
    #[serde(default)]
    pub detuning: CavityDetuning,
    #[serde(default)]
    pub scatterers: Option<MirrorScatterers>,
    /// `Tħωδ`, outcoupled power per intracavity photon [W].
    pub output_scale: f64,
}

impl ModelParams {
    pub fn from_physical(p: &PhysicalParams, d: &DerivedParams) -> Self {
        ModelParams {
            kappa: d.kappa,
            u0: d.u0,
            pump: d.pump_rate,
            wavenumber: p.laser.wavenumber,
            mass: p.species.mass,
            detuning: CavityDetuning::Collective,
            scatterers: None,
            output_scale: p.geometry.mirror_transmission * HBAR * p.laser.omega * d.free_spectral_range,
        }
    }

    /// Recoil constant `ε = ħk²/m`.
    pub fn recoil(&self) -> f64 {
        HBAR * self.wavenumber * self.wavenumber / self.mass
    }

    /// Collective light shift of atoms and scatterers, `N U0 + N_s U_s`.
    pub fn collective_shift(&self, atom_number: f64) -> f64 {
        atom_number * self.u0 + self.scatterers.as_ref().map_or(0.0, |s| s.collective_strength())
    }

    /// `Δc` for the current ensemble.
    pub fn cavity_detuning(&self, ensemble_positions: &[f64], atom_number: f64) -> f64 {
        match self.detuning {
            CavityDetuning::Collective => self.collective_shift(atom_number),
            CavityDetuning::Static { value } => value,
            CavityDetuning::Tracking => {
                let n = ensemble_positions.len() as f64;
                let mean_cos = phasor_sum(ensemble_positions, self.wavenumber).re / n;
                atom_number * self.u0 * mean_cos
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa", self.kappa), ("wavenumber", self.wavenumber), ("mass", self.mass)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CarlError::invalid(name, "must be finite and positive"));
            }
        }
        if !self.u0.is_finite() || !self.pump.is_finite() || !self.output_scale.is_finite() {
            return Err(CarlError::invalid("model", "u0, pump and output_scale must be finite"));
        }
        if let Some(s) = &self.scatterers {
            if s.positions.is_empty() {
                return Err(CarlError::invalid("scatterers", "need at least one position"));
            }
        }
        Ok(())
    }

    /// Largest rate entering the stability guard for an ensemble of `atom_number`.
    pub fn fastest_rate(&self, atom_number: f64) -> f64 {
        let mut rate = self.kappa.max(self.collective_shift(atom_number).abs()).max((atom_number * self.u0).abs());
        if let CavityDetuning::Static { value } = self.detuning {
            rate = rate.max(value.abs());
        }
        rate
    }
}

/// Rates shared by the field equations and the force: the collective shift
/// and the position-weighted backscattering amplitude.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Couplings {
    /// `(N U0 + N_s U_s) − Δc`.
    pub detuned_shift: f64,
    /// Atomic part `U0 w Σ e^{2ikx_n}`.
    pub atomic: Complex64,
    /// Total `U0 w Σ e^{2ikx_n} + U_s (N_s/M) Σ e^{2ikx_s}`.
    pub total: Complex64,
}

impl Couplings {
    pub fn evaluate(model: &ModelParams, positions: &[f64], atom_number: f64) -> Self {
        let weight = atom_number / positions.len() as f64;
        let atomic = phasor_sum(positions, model.wavenumber) * (model.u0 * weight);
        let mirror = model
            .scatterers
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |s| s.bunching(model.wavenumber) * s.collective_strength());
        let delta_c = model.cavity_detuning(positions, atom_number);
        Couplings {
            detuned_shift: model.collective_shift(atom_number) - delta_c,
            atomic,
            total: atomic + mirror,
        }
    }
}
