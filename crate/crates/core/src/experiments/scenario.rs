//! Named experimental sequences and their analysis.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    run, Action, CavityDetuning, InitialSpec, Integrator, MirrorScatterers, ModelParams, MolassesModel, PumpStart,
    Schedule, ScheduleEvent, SimConfig, SimTrace, SpatialDistribution,
};
use crate::error::{CarlError, Result};
use crate::observables::{instantaneous_frequency, FrequencyEstimate};
use crate::params::PhysicalParams;

use super::stats::median;

/// Replacements applied to the model derived from the physical preset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    /// Pump rate `η+` [1/s].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<f64>,
    /// Pump given as the steady intracavity photon number `(η+/κ)²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_photons: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<CavityDetuning>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatterers: Option<MirrorScatterers>,
}

impl ModelOverrides {
    pub fn apply(&self, model: &mut ModelParams) -> Result<()> {
        if self.pump.is_some() && self.pump_photons.is_some() {
            return Err(CarlError::InvalidConfig("give either `pump` or `pump_photons`, not both".into()));
        }
        if let Some(k) = self.kappa {
            model.kappa = k;
        }
        if let Some(u) = self.u0 {
            model.u0 = u;
        }
        if let Some(p) = self.pump {
            model.pump = p;
        }
        if let Some(n) = self.pump_photons {
            if !(n >= 0.0) {
                return Err(CarlError::invalid("pump_photons", "must be non-negative"));
            }
            model.pump = model.kappa * n.sqrt();
        }
        if let Some(d) = self.detuning {
            model.detuning = d;
        }
        if let Some(s) = &self.scatterers {
            model.scatterers = Some(s.clone());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    /// Spectral window [s]; no spectral analysis if absent.
    #[serde(default)]
    pub window: Option<f64>,
    /// Trailing fraction of the run treated as steady state.
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Bunching level separating ordered from disordered.
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_tail() -> f64 {
    0.2
}

fn default_level() -> f64 {
    0.5
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec { window: None, tail_fraction: default_tail(), level: default_level() }
    }
}

fn default_preset() -> String {
    "rb85-paper".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Physical parameter preset the model is derived from.
    #[serde(default = "default_preset")]
    pub preset: String,
    /// Laser detuning from D1 [rad/s]; the preset's value if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_d1: Option<f64>,
    #[serde(default)]
    pub overrides: ModelOverrides,
    pub config: SimConfig,
    pub initial: InitialSpec,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

/// Shipped preset names.
pub const PRESETS: [&str; 4] = ["fig2", "fig3", "fig6", "null"];

/// Desk-scale molasses: `γ_fr/m = 10⁶ s⁻¹` at 10 µK.
pub fn desk_molasses(mass: f64, with_noise: bool) -> MolassesModel {
    let friction = 1e6 * mass;
    if with_noise {
        MolassesModel::at_temperature(friction, 10e-6)
    } else {
        MolassesModel::frictional(friction)
    }
}

impl Scenario {
    pub fn physical(&self) -> Result<PhysicalParams> {
        let mut p = PhysicalParams::preset(&self.preset)
            .ok_or_else(|| CarlError::InvalidConfig(format!("unknown parameter preset `{}`", self.preset)))?;
        if let Some(d) = self.detuning_d1 {
            p = p.with_detuning_d1(d);
        }
        Ok(p)
    }

    pub fn model(&self) -> Result<ModelParams> {
        let p = self.physical()?;
        let d = p.derive()?;
        let mut m = ModelParams::from_physical(&p, &d);
        self.overrides.apply(&mut m)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.initial.validate()?;
        crate::dynamics::validate_schedule(&self.schedule)?;
        let a = &self.analysis;
        if !(a.tail_fraction > 0.0 && a.tail_fraction <= 1.0) {
            return Err(CarlError::invalid("tail_fraction", "must lie in (0, 1]"));
        }
        if !(a.level > 0.0 && a.level < 1.0) {
            return Err(CarlError::invalid("level", "must lie in (0, 1)"));
        }
        self.model().map(|_| ())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn preset(name: &str) -> Option<Scenario> {
        let p = PhysicalParams::rb85_paper();
        let d = p.derive().ok()?;
        let kappa = d.kappa;
        let mass = p.species.mass;
        let homogeneous = SpatialDistribution::Homogeneous { length: 100e-6, center: 0.0 };
        let initial = InitialSpec {
            n_sim: 100,
            atom_number: 1e6,
            distribution: homogeneous,
            temperature: 10e-6,
            probe_photons: 1.0,
            probe_phase: None,
            velocity: 0.0,
            pump_start: PumpStart::Steady,
        };
        let overrides = ModelOverrides { pump_photons: Some(3e8), ..Default::default() };
        let on = |m: MolassesModel| ScheduleEvent { time: 0.0, action: Action::MolassesOn { molasses: m } };
        let base = |name: &str, dt: f64, duration: f64| Scenario {
            name: name.into(),
            preset: default_preset(),
            detuning_d1: None,
            overrides: overrides.clone(),
            config: SimConfig {
                dt: dt / kappa,
                duration: duration / kappa,
                integrator: Integrator::Overdamped,
                seed: 1,
                phase_lock: true,
                sample_stride: 1,
                snapshot_stride: None,
            },
            initial: initial.clone(),
            schedule: vec![on(desk_molasses(mass, true))],
            analysis: AnalysisSpec { window: Some(40.0 / kappa), ..Default::default() },
        };
        match name {
            // molasses switched on at t = 0 above threshold
            "fig2" => Some(base("fig2", 0.01, 300.0)),
            // steady state, then molasses off and free acceleration
            "fig3" => {
                let mut s = base("fig3", 0.002, 400.0);
                s.config.sample_stride = 4;
                s.schedule.push(ScheduleEvent { time: 200.0 / kappa, action: Action::MolassesOff });
                s.analysis.window = Some(10.0 / kappa);
                Some(s)
            }
            // friction without diffusion: synchronization from a homogeneous start
            "fig6" => {
                let mut s = base("fig6", 0.01, 300.0);
                s.schedule = vec![on(desk_molasses(mass, false))];
                Some(s)
            }
            "null" => {
                let mut s = base("null", 0.01, 50.0);
                s.overrides.pump_photons = Some(0.0);
                s.config.integrator = Integrator::Full;
                s.config.phase_lock = false;
                s.initial.temperature = 0.0;
                s.initial.probe_photons = 0.0;
                s.schedule.clear();
                s.analysis.window = Some(10.0 / kappa);
                Some(s)
            }
            _ => None,
        }
    }
}

/// Scalars reported with every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub seed: u64,
    pub scenario_hash: String,
    pub final_bunching: f64,
    /// Median bunching over the trailing fraction of the run.
    pub steady_bunching: f64,
    pub final_probe_photons: f64,
    /// Mean beat frequency [rad/s] over the windows with a tone in the trailing fraction.
    pub mean_beat_frequency: Option<f64>,
    pub beat_present: bool,
    /// Steady bunching exceeds the analysis level.
    pub ordered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutput {
    pub trace: SimTrace,
    pub spectrum: Vec<FrequencyEstimate>,
    pub summary: ScenarioSummary,
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioOutput> {
    let ctx = |e: CarlError| e.context(format!("scenario `{}`", scenario.name));
    scenario.validate().map_err(ctx)?;
    let model = scenario.model().map_err(ctx)?;
    let trace = run(&scenario.config, &model, &scenario.initial, &scenario.schedule).map_err(ctx)?;
    let spectrum = match scenario.analysis.window {
        Some(w) => instantaneous_frequency(&trace.times, &trace.beat_power, w).map_err(ctx)?,
        None => Vec::new(),
    };
    let summary = summarize(scenario, &trace, &spectrum);
    Ok(ScenarioOutput { trace, spectrum, summary })
}

/// Median bunching over the trailing `fraction` of the samples.
pub fn steady_bunching(trace: &SimTrace, fraction: f64) -> f64 {
    let n = trace.bunching.len();
    let start = n - ((n as f64 * fraction).ceil() as usize).clamp(1, n);
    median(&trace.bunching[start..]).unwrap_or(0.0)
}

fn summarize(s: &Scenario, trace: &SimTrace, spectrum: &[FrequencyEstimate]) -> ScenarioSummary {
    let a = &s.analysis;
    let steady = steady_bunching(trace, a.tail_fraction);
    let t_end = trace.times.last().copied().unwrap_or(0.0);
    let t_start = trace.times.first().copied().unwrap_or(0.0);
    let tail_from = t_end - a.tail_fraction * (t_end - t_start);
    let tones: Vec<f64> =
        spectrum.iter().filter(|e| e.present && e.time >= tail_from).map(|e| e.frequency).collect();
    ScenarioSummary {
        name: s.name.clone(),
        seed: s.config.seed,
        scenario_hash: s.hash(),
        final_bunching: trace.bunching.last().copied().unwrap_or(0.0),
        steady_bunching: steady,
        final_probe_photons: trace.alpha_minus.last().map_or(0.0, |a| a.norm_sqr()),
        mean_beat_frequency: (!tones.is_empty()).then(|| tones.iter().sum::<f64>() / tones.len() as f64),
        beat_present: !tones.is_empty(),
        ordered: steady > a.level,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let s = Scenario::preset(name).unwrap();
            s.validate().unwrap();
            let json = serde_json::to_string_pretty(&s).unwrap();
            let back: Scenario = serde_json::from_str(&json).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.hash(), s.hash());
        }
        assert!(Scenario::preset("fig9").is_none());
    }

    #[test]
    fn hash_tracks_every_field() {
        let s = Scenario::preset("fig2").unwrap();
        let mut t = s.clone();
        t.config.seed += 1;
        assert_ne!(s.hash(), t.hash());
        let mut t = s.clone();
        t.initial.n_sim = 99;
        assert_ne!(s.hash(), t.hash());
        let mut t = s.clone();
        t.analysis.level = 0.6;
        assert_ne!(s.hash(), t.hash());
        assert_eq!(s.hash(), s.clone().hash());
    }

    #[test]
    fn preset_regime() {
        let s = Scenario::preset("fig2").unwrap();
        let m = s.model().unwrap();
        let ratio = (s.initial.atom_number * m.u0 / m.kappa).abs();
        assert!((0.06..=1.0).contains(&ratio), "NU0/κ = {ratio}");
    }

    #[test]
    fn conflicting_pump_overrides() {
        let mut s = Scenario::preset("fig2").unwrap();
        s.overrides.pump = Some(1.0);
        assert!(matches!(s.model(), Err(CarlError::InvalidConfig(_))));
    }

    #[test]
    fn null_preset_is_flat() {
        let out = run_scenario(&Scenario::preset("null").unwrap()).unwrap();
        let b0 = out.trace.bunching[0];
        assert!(out.trace.bunching.iter().all(|b| (b - b0).abs() < 1e-12));
        assert!(out.trace.beat_power.windows(2).all(|w| w[1] <= w[0]));
        assert!(!out.summary.beat_present);
        assert!(out.summary.final_probe_photons < 1e-20);
    }
}
