//! Atom-number scaling of the probe power and the CARL frequency for a
//! perfectly bunched cloud.

use serde::{Deserialize, Serialize};

use crate::analytic::BunchedCarl;
use crate::dynamics::{run, InitialSpec, Integrator, ModelParams, PumpStart, SimConfig, SpatialDistribution};
use crate::error::{CarlError, Result};

use super::stats::{fit_power_law, PowerLaw};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub atom_number: f64,
    /// Output probe power `output_scale·|α−|²` at the end of the run [W].
    pub probe_power: f64,
    /// `k·v̄` at the end of the run [rad/s].
    pub carl_frequency: f64,
    /// Long-time predictions for comparison.
    pub predicted_probe_power: f64,
    pub predicted_carl_frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    pub probe_power_law: PowerLaw,
    pub frequency_law: PowerLaw,
}

/// Undamped runs of a single perfectly bunched macro-particle for each atom
/// number, read out at `duration`.
pub fn scaling_sweep(model: &ModelParams, atom_numbers: &[f64], duration: f64, dt: f64) -> Result<ScalingResult> {
    if atom_numbers.len() < 5 {
        return Err(CarlError::Domain("scaling sweep needs at least five atom numbers".into()));
    }
    let lo = atom_numbers.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = atom_numbers.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 10.0 {
        return Err(CarlError::Domain(format!("atom numbers must be positive and span a decade (got {lo:e}..{hi:e})")));
    }
    let config = SimConfig {
        dt,
        duration,
        integrator: Integrator::Full,
        seed: 0,
        phase_lock: true,
        sample_stride: usize::MAX,
        snapshot_stride: None,
    };
    let k = model.wavenumber;
    let mut points = Vec::with_capacity(atom_numbers.len());
    for &n in atom_numbers {
        let initial = InitialSpec {
            n_sim: 1,
            atom_number: n,
            distribution: SpatialDistribution::PerfectlyBunched { position: 0.0 },
            temperature: 0.0,
            probe_photons: 1.0,
            probe_phase: Some(0.0),
            velocity: 0.0,
            pump_start: PumpStart::Steady,
        };
        let trace = run(&config, model, &initial, &[]).map_err(|e| e.context(format!("N = {n:e}")))?;
        let minus = *trace.alpha_minus.last().expect("trace holds the final sample");
        let v = *trace.mean_velocity.last().expect("trace holds the final sample");
        let theory = BunchedCarl {
            atom_number: n,
            u0: model.u0,
            pump: model.pump,
            kappa: model.kappa,
            recoil: model.recoil(),
        };
        let a = theory.probe_amplitude(duration)?.value;
        points.push(ScalingPoint {
            atom_number: n,
            probe_power: model.output_scale * minus.norm_sqr(),
            carl_frequency: k * v,
            predicted_probe_power: model.output_scale * a * a,
            predicted_carl_frequency: theory.carl_frequency(duration)?.value,
        });
    }
    let n: Vec<f64> = points.iter().map(|p| p.atom_number).collect();
    let p: Vec<f64> = points.iter().map(|p| p.probe_power).collect();
    let w: Vec<f64> = points.iter().map(|p| p.carl_frequency.abs()).collect();
    Ok(ScalingResult { probe_power_law: fit_power_law(&n, &p)?, frequency_law: fit_power_law(&n, &w)?, points })
}
