use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CarlError, Result};

/// Amplitudes of the pumped (`plus`) and counterpropagating probe (`minus`) modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl FieldState {
    pub fn new(plus: Complex64, minus: Complex64) -> Self {
        FieldState { plus, minus }
    }

    /// Probe phase `φ = arg(α−)`.
    pub fn probe_phase(&self) -> f64 {
        self.minus.arg()
    }

    /// `|α+ + α−|²`, the beat intensity in photon units.
    pub fn beat_intensity(&self) -> f64 {
        (self.plus + self.minus).norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.plus.re.is_finite() && self.plus.im.is_finite() && self.minus.re.is_finite() && self.minus.im.is_finite()
    }

    /// Multiplies both amplitudes by `e^{iθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        FieldState { plus: self.plus * r, minus: self.minus * r }
    }
}

/// Rotates both modes so that `arg(α+) = 0`. Forces, `|α±|` and the beat
/// intensity are unchanged.
pub fn apply_phase_lock(field: &FieldState) -> Result<FieldState> {
    if field.plus.norm() == 0.0 {
        return Err(CarlError::LockUndefined);
    }
    let mut locked = field.rotated(-field.plus.arg());
    locked.plus = Complex64::new(locked.plus.norm(), 0.0);
    Ok(locked)
}

/// `N_sim` macro-particles on the cavity axis representing `atom_number` atoms.
///
/// The backscattering sum of the field equations is multiplied by
/// [`weight`](Self::weight); the force on each particle is the single-atom force.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    pub atom_number: f64,
}

impl ParticleEnsemble {
    pub fn new(positions: Vec<f64>, momenta: Vec<f64>, atom_number: f64) -> Result<Self> {
        let e = ParticleEnsemble { positions, momenta, atom_number };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(CarlError::invalid("ensemble", "needs at least one macro-particle"));
        }
        if self.positions.len() != self.momenta.len() {
            return Err(CarlError::invalid("ensemble", "positions and momenta differ in length"));
        }
        if !(self.atom_number >= 0.0 && self.atom_number.is_finite()) {
            return Err(CarlError::invalid("atom_number", "must be finite and non-negative"));
        }
        // N = 0 is allowed and means an empty cavity
        if self.atom_number > 0.0 && self.weight() < 1.0 {
            return Err(CarlError::invalid(
                "atom_number",
                format!("weight N/N_sim = {} is below one", self.weight()),
            ));
        }
        if self.momenta.iter().any(|p| !p.is_finite()) {
            return Err(CarlError::invalid("momenta", "must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Atoms represented by one macro-particle, `N/N_sim`.
    pub fn weight(&self) -> f64 {
        self.atom_number / self.positions.len() as f64
    }

    /// Unweighted phasor sum `Σ e^{2ikx_n}`.
    pub fn phasor_sum(&self, k: f64) -> Complex64 {
        phasor_sum(&self.positions, k)
    }

    /// Complex bunching `N_sim⁻¹ Σ e^{2ikx_n}`.
    pub fn complex_bunching(&self, k: f64) -> Complex64 {
        self.phasor_sum(k) / self.positions.len() as f64
    }

    pub fn mean_velocity(&self, mass: f64) -> f64 {
        self.momenta.iter().sum::<f64>() / (self.momenta.len() as f64 * mass)
    }

    /// Momentum of all represented atoms, `w Σ p_n`.
    pub fn total_momentum(&self) -> f64 {
        self.weight() * self.momenta.iter().sum::<f64>()
    }

    pub fn kinetic_energy(&self, mass: f64) -> f64 {
        self.weight() * self.momenta.iter().map(|p| p * p).sum::<f64>() / (2.0 * mass)
    }
}

pub(crate) fn phasor_sum(positions: &[f64], k: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &x in positions {
        let (s, c) = (2.0 * k * x).sin_cos();
        re += c;
        im += s;
    }
    Complex64::new(re, im)
}

/// Full dynamical state, including the running count of photons the atoms
/// have moved from the pumped into the probe mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub time: f64,
    pub field: FieldState,
    pub ensemble: ParticleEnsemble,
    pub photon_transfer: f64,
}

impl SystemState {
    pub fn new(field: FieldState, ensemble: ParticleEnsemble) -> Self {
        SystemState { time: 0.0, field, ensemble, photon_transfer: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.field.is_finite()
            && self.photon_transfer.is_finite()
            && self.ensemble.positions.iter().all(|x| x.is_finite())
            && self.ensemble.momenta.iter().all(|p| p.is_finite())
    }
}
