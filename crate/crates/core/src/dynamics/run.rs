//! Scheduled simulation runs and their sampled traces.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::K_B;
use crate::error::{CarlError, Result};

use super::integrate::{step_overdamped, FullStepper};
use super::model::{ModelParams, MolassesModel};
use super::state::{apply_phase_lock, FieldState, ParticleEnsemble, SystemState};

/// Largest `dt` times the fastest rate accepted by [`run`].
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Second-order equations; friction (if the molasses is on) enters as a drag.
    #[default]
    Full,
    /// Inertia eliminated while the molasses is on; full equations otherwise.
    Overdamped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Time step [s].
    pub dt: f64,
    /// Total simulated time [s].
    pub duration: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub seed: u64,
    /// Re-phase the modes after each step so that `arg(α+) = 0`.
    #[serde(default)]
    pub phase_lock: bool,
    /// Trace sampling stride in steps.
    #[serde(default = "one")]
    pub sample_stride: usize,
    /// Particle snapshot stride in steps; no snapshots if absent.
    #[serde(default)]
    pub snapshot_stride: Option<usize>,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn steps(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CarlError::invalid("dt", "must be finite and positive"));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(CarlError::invalid("duration", "must be finite and non-negative"));
        }
        if self.sample_stride == 0 || self.snapshot_stride == Some(0) {
            return Err(CarlError::invalid("stride", "must be at least one step"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpatialDistribution {
    /// Uniform over `[center − length/2, center + length/2]`.
    Homogeneous {
        length: f64,
        #[serde(default)]
        center: f64,
    },
    Gaussian {
        sigma: f64,
        #[serde(default)]
        center: f64,
    },
    /// Every particle at `position`.
    PerfectlyBunched {
        #[serde(default)]
        position: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpStart {
    /// `α+(0) = η+/κ`.
    #[default]
    Steady,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    /// Number of macro-particles.
    #[serde(default = "default_n_sim")]
    pub n_sim: usize,
    /// Represented atom number `N`.
    pub atom_number: f64,
    pub distribution: SpatialDistribution,
    /// Temperature of the thermal momentum distribution [K].
    #[serde(default)]
    pub temperature: f64,
    /// Initial probe photon number `|α−(0)|²`.
    #[serde(default = "default_probe_photons")]
    pub probe_photons: f64,
    /// Probe phase; drawn uniformly from the run's RNG if absent.
    #[serde(default)]
    pub probe_phase: Option<f64>,
    /// Initial common velocity added to the thermal spread [m/s].
    #[serde(default)]
    pub velocity: f64,
    #[serde(default)]
    pub pump_start: PumpStart,
}

fn default_n_sim() -> usize {
    100
}

fn default_probe_photons() -> f64 {
    1.0
}

impl InitialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sim == 0 {
            return Err(CarlError::invalid("n_sim", "need at least one macro-particle"));
        }
        if !(self.temperature >= 0.0) || !(self.probe_photons >= 0.0) {
            return Err(CarlError::invalid("initial", "temperature and probe photons must be non-negative"));
        }
        match self.distribution {
            SpatialDistribution::Homogeneous { length, .. } if !(length >= 0.0) => {
                Err(CarlError::invalid("length", "must be non-negative"))
            }
            SpatialDistribution::Gaussian { sigma, .. } if !(sigma >= 0.0) => {
                Err(CarlError::invalid("sigma", "must be non-negative"))
            }
            _ => Ok(()),
        }
    }

    /// Draws the initial state. The draw order (positions, momenta, probe
    /// phase) is part of the reproducibility contract.
    pub fn sample<R: Rng + ?Sized>(&self, model: &ModelParams, rng: &mut R) -> Result<SystemState> {
        self.validate()?;
        let n = self.n_sim;
        let positions: Vec<f64> = match self.distribution {
            SpatialDistribution::Homogeneous { length, center } => {
                (0..n).map(|_| center + length * (rng.random::<f64>() - 0.5)).collect()
            }
            SpatialDistribution::Gaussian { sigma, center } => (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    center + sigma * z
                })
                .collect(),
            SpatialDistribution::PerfectlyBunched { position } => vec![position; n],
        };
        let p_sigma = (model.mass * K_B * self.temperature).sqrt();
        let p0 = model.mass * self.velocity;
        let momenta: Vec<f64> = if p_sigma > 0.0 {
            let normal = Normal::new(p0, p_sigma).map_err(|e| CarlError::invalid("temperature", e.to_string()))?;
            (0..n).map(|_| normal.sample(rng)).collect()
        } else {
            vec![p0; n]
        };
        let phase = match self.probe_phase {
            Some(p) => p,
            None => 2.0 * PI * rng.random::<f64>(),
        };
        let ensemble = ParticleEnsemble::new(positions, momenta, self.atom_number)?;
        let plus = match self.pump_start {
            PumpStart::Steady => Complex64::new(model.pump / model.kappa, 0.0),
            PumpStart::Empty => Complex64::new(0.0, 0.0),
        };
        let minus = Complex64::from_polar(self.probe_photons.sqrt(), phase);
        Ok(SystemState::new(FieldState::new(plus, minus), ensemble))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action")]
pub enum Action {
    MolassesOn { molasses: MolassesModel },
    MolassesOff,
    /// New pump rate `η+` [1/s].
    SetPump { rate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEvent {
    /// Event time [s].
    pub time: f64,
    #[serde(flatten)]
    pub action: Action,
}

pub type Schedule = Vec<ScheduleEvent>;

pub fn validate_schedule(schedule: &[ScheduleEvent]) -> Result<()> {
    for w in schedule.windows(2) {
        if w[1].time < w[0].time {
            return Err(CarlError::InvalidConfig(format!(
                "schedule events must be time-ordered ({} s after {} s)",
                w[1].time, w[0].time
            )));
        }
    }
    for e in schedule {
        if !(e.time >= 0.0 && e.time.is_finite()) {
            return Err(CarlError::InvalidConfig(format!("event time {} is not a valid time", e.time)));
        }
        match &e.action {
            Action::MolassesOn { molasses } => molasses.validate()?,
            Action::SetPump { rate } if !rate.is_finite() => {
                return Err(CarlError::invalid("rate", "must be finite"));
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
}

/// Sampled time series of one run; all series have the same length.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub alpha_plus: Vec<Complex64>,
    pub alpha_minus: Vec<Complex64>,
    pub bunching: Vec<f64>,
    /// Mean particle velocity [m/s].
    pub mean_velocity: Vec<f64>,
    /// Outcoupled beat power `Tħωδ|α+ + α−|²` [W].
    pub beat_power: Vec<f64>,
    /// `w Σ p_n` [kg m/s].
    pub total_momentum: Vec<f64>,
    /// Cumulative photons moved from the pumped into the probe mode by the atoms.
    pub photon_transfer: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Uniform sample spacing [s]; `None` for fewer than two samples.
    pub fn sample_interval(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        Some((self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64)
    }

    pub fn probe_photons(&self) -> Vec<f64> {
        self.alpha_minus.iter().map(|a| a.norm_sqr()).collect()
    }

    fn record(&mut self, state: &SystemState, model: &ModelParams) {
        let k = model.wavenumber;
        self.times.push(state.time);
        self.alpha_plus.push(state.field.plus);
        self.alpha_minus.push(state.field.minus);
        self.bunching.push(state.ensemble.complex_bunching(k).norm());
        self.mean_velocity.push(state.ensemble.mean_velocity(model.mass));
        self.beat_power.push(model.output_scale * state.field.beat_intensity());
        self.total_momentum.push(state.ensemble.total_momentum());
        self.photon_transfer.push(state.photon_transfer);
    }

    fn snapshot(&mut self, state: &SystemState) {
        self.snapshots.push(Snapshot {
            time: state.time,
            positions: state.ensemble.positions.clone(),
            momenta: state.ensemble.momenta.clone(),
        });
    }
}

/// Checks the step guard `dt·max(κ, |NU0|, |Δc|, γ_fr/m) < 0.1`.
pub fn check_stability(config: &SimConfig, model: &ModelParams, atom_number: f64, schedule: &[ScheduleEvent]) -> Result<()> {
    let mut rate = model.fastest_rate(atom_number);
    if config.integrator == Integrator::Full {
        for e in schedule {
            if let Action::MolassesOn { molasses } = &e.action {
                rate = rate.max(molasses.friction / model.mass);
            }
        }
    }
    if config.dt * rate >= STABILITY_LIMIT {
        return Err(CarlError::InvalidConfig(format!(
            "time step {:e} s too large: dt × fastest rate = {:.3} (limit {STABILITY_LIMIT})",
            config.dt,
            config.dt * rate
        )));
    }
    Ok(())
}

/// Runs from a sampled initial state. Deterministic given `config.seed`.
pub fn run(config: &SimConfig, model: &ModelParams, initial: &InitialSpec, schedule: &[ScheduleEvent]) -> Result<SimTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let state = initial.sample(model, &mut rng)?;
    run_from_state(config, model, state, schedule, &mut rng)
}

/// Runs from an explicit state, drawing noise from `rng`.
pub fn run_from_state<R: Rng + ?Sized>(
    config: &SimConfig,
    model: &ModelParams,
    mut state: SystemState,
    schedule: &[ScheduleEvent],
    rng: &mut R,
) -> Result<SimTrace> {
    config.validate()?;
    model.validate()?;
    state.ensemble.validate()?;
    validate_schedule(schedule)?;
    check_stability(config, model, state.ensemble.atom_number, schedule)?;

    let mut model = model.clone();
    let start = state.time;
    let steps = config.steps();
    let mut trace = SimTrace::default();
    let mut stepper = FullStepper::new(state.ensemble.len());
    let mut molasses: Option<MolassesModel> = None;
    let mut next_event = 0;

    let apply_events = |t: f64, next: &mut usize, molasses: &mut Option<MolassesModel>, model: &mut ModelParams| {
        while *next < schedule.len() && schedule[*next].time <= t + 0.5 * config.dt {
            match &schedule[*next].action {
                Action::MolassesOn { molasses: m } => *molasses = Some(*m),
                Action::MolassesOff => *molasses = None,
                Action::SetPump { rate } => model.pump = *rate,
            }
            *next += 1;
        }
    };

    apply_events(0.0, &mut next_event, &mut molasses, &mut model);
    if config.phase_lock && state.field.plus.norm() > 0.0 {
        state.field = apply_phase_lock(&state.field)?;
    }
    trace.record(&state, &model);
    if config.snapshot_stride.is_some() {
        trace.snapshot(&state);
    }

    for n in 1..=steps {
        let elapsed = (n - 1) as f64 * config.dt;
        apply_events(elapsed, &mut next_event, &mut molasses, &mut model);
        let result = match (config.integrator, molasses) {
            (Integrator::Overdamped, Some(m)) if m.friction > 0.0 => {
                step_overdamped(&mut state, &m, &model, config.dt, rng)
            }
            (_, m) => {
                let friction = m.map_or(0.0, |m| m.friction);
                let r = stepper.step(&mut state, &model, friction, config.dt);
                if let (Ok(()), Some(m)) = (&r, m) {
                    if m.diffusion > 0.0 {
                        let kick = (2.0 * m.diffusion * config.dt).sqrt();
                        for p in state.ensemble.momenta.iter_mut() {
                            let xi: f64 = rng.sample(StandardNormal);
                            *p += kick * xi;
                        }
                    }
                }
                r
            }
        };
        // pin the clock to the step count so long runs do not drift
        state.time = start + n as f64 * config.dt;
        result.map_err(|e| match e {
            CarlError::Divergence { .. } => CarlError::Divergence { step: n, time: state.time },
            other => other.context(format!("step {n} at t = {:e} s", state.time)),
        })?;
        if config.phase_lock && state.field.plus.norm() > 0.0 {
            state.field = apply_phase_lock(&state.field)?;
        }
        if n % config.sample_stride as u64 == 0 || n == steps {
            trace.record(&state, &model);
        }
        if let Some(s) = config.snapshot_stride {
            if n % s as u64 == 0 || n == steps {
                trace.snapshot(&state);
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::model::CavityDetuning;

    fn model() -> ModelParams {
        ModelParams {
            kappa: 1.385e5,
            u0: -0.08,
            pump: 1.385e5 * 1e3,
            wavenumber: 2.0 * PI / 780e-9,
            mass: crate::constants::RB85_MASS,
            detuning: CavityDetuning::Collective,
            scatterers: None,
            output_scale: 1e-9,
        }
    }

    fn initial(n_atoms: f64) -> InitialSpec {
        InitialSpec {
            n_sim: 50,
            atom_number: n_atoms,
            distribution: SpatialDistribution::Homogeneous { length: 1e-3, center: 0.0 },
            temperature: 1e-4,
            probe_photons: 1.0,
            probe_phase: None,
            velocity: 0.0,
            pump_start: PumpStart::Steady,
        }
    }

    #[test]
    fn empty_cavity_probe_decays_at_kappa() {
        let m = model();
        let cfg = SimConfig {
            dt: 1e-7,
            duration: 5e-5,
            integrator: Integrator::Full,
            seed: 3,
            phase_lock: false,
            sample_stride: 10,
            snapshot_stride: None,
        };
        let mut init = initial(0.0);
        init.probe_photons = 4.0;
        let tr = run(&cfg, &m, &init, &[]).unwrap();
        for (t, a) in tr.times.iter().zip(&tr.alpha_minus) {
            let expect = 2.0 * (-m.kappa * t).exp();
            assert!((a.norm() - expect).abs() < 1e-9 * 2.0, "t={t}");
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let m = model();
        let cfg = SimConfig {
            dt: 2e-8,
            duration: 2e-5,
            integrator: Integrator::Overdamped,
            seed: 11,
            phase_lock: true,
            sample_stride: 7,
            snapshot_stride: Some(100),
        };
        let sched = vec![ScheduleEvent {
            time: 0.0,
            action: Action::MolassesOn { molasses: MolassesModel::at_temperature(1e-19, 1e-5) },
        }];
        let a = run(&cfg, &m, &initial(1e5), &sched).unwrap();
        let b = run(&cfg, &m, &initial(1e5), &sched).unwrap();
        assert_eq!(a, b);
        let mut cfg2 = cfg.clone();
        cfg2.seed = 12;
        let c = run(&cfg2, &m, &initial(1e5), &sched).unwrap();
        assert_ne!(a.bunching, c.bunching);
        assert_eq!(a.times.len(), a.beat_power.len());
        assert!(a.times.windows(2).all(|w| w[1] > w[0]));
        assert!(a.bunching.iter().all(|b| (0.0..=1.0 + 1e-12).contains(b)));
    }

    #[test]
    fn stability_guard_rejects_large_steps() {
        let m = model();
        let cfg = SimConfig {
            dt: 1e-6,
            duration: 1e-4,
            integrator: Integrator::Full,
            seed: 0,
            phase_lock: false,
            sample_stride: 1,
            snapshot_stride: None,
        };
        assert!(matches!(run(&cfg, &m, &initial(1e5), &[]), Err(CarlError::InvalidConfig(_))));
    }

    #[test]
    fn unordered_schedule_is_rejected() {
        let sched = vec![
            ScheduleEvent { time: 1.0, action: Action::MolassesOff },
            ScheduleEvent { time: 0.5, action: Action::MolassesOff },
        ];
        assert!(validate_schedule(&sched).is_err());
    }

    #[test]
    fn schedule_json_shape() {
        let e = ScheduleEvent { time: 0.0, action: Action::MolassesOn { molasses: MolassesModel::frictional(1.0) } };
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"action\":\"molasses_on\""), "{s}");
        let back: ScheduleEvent = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
