//! Right-hand sides of the atom–field equations and the two steppers.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::constants::HBAR;
use crate::error::{CarlError, Result};

use super::model::{Couplings, ModelParams, MolassesModel};
use super::state::{FieldState, ParticleEnsemble, SystemState};

/// `(dα+/dt, dα−/dt)` for the given field and ensemble.
pub fn field_derivative(field: &FieldState, ensemble: &ParticleEnsemble, model: &ModelParams) -> (Complex64, Complex64) {
    let c = Couplings::evaluate(model, &ensemble.positions, ensemble.atom_number);
    field_rates(field, &c, model)
}

fn field_rates(field: &FieldState, c: &Couplings, model: &ModelParams) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let diag = Complex64::new(-model.kappa, -c.detuned_shift);
    let plus = diag * field.plus - i * c.total.conj() * field.minus + model.pump;
    let minus = diag * field.minus - i * c.total * field.plus;
    (plus, minus)
}

/// Axial dipole force on one atom at `x`,
/// `2ħkiU0(α+*α− e^{−2ikx} − α+α−* e^{2ikx})` [N].
pub fn dipole_force(x: f64, field: &FieldState, u0: f64, k: f64) -> f64 {
    let (s, c) = (2.0 * k * x).sin_cos();
    force_from_phase(field.plus.conj() * field.minus, c, s, u0, k)
}

#[inline]
fn force_from_phase(z: Complex64, cos2kx: f64, sin2kx: f64, u0: f64, k: f64) -> f64 {
    // Im(z e^{-2ikx})
    let im = z.im * cos2kx - z.re * sin2kx;
    -4.0 * HBAR * k * u0 * im
}

/// Photons per second moved from the pumped into the probe mode by the atoms.
/// The atoms gain `2ħk` per transferred photon.
pub fn photon_transfer_rate(field: &FieldState, ensemble: &ParticleEnsemble, model: &ModelParams) -> f64 {
    let c = Couplings::evaluate(model, &ensemble.positions, ensemble.atom_number);
    transfer_rate(field, &c)
}

#[inline]
fn transfer_rate(field: &FieldState, c: &Couplings) -> f64 {
    2.0 * (field.minus.conj() * c.atomic * field.plus).im
}

#[derive(Clone, Debug, Default)]
struct Stage {
    d_plus: Complex64,
    d_minus: Complex64,
    dx: Vec<f64>,
    dp: Vec<f64>,
    dq: f64,
}

impl Stage {
    fn sized(n: usize) -> Self {
        Stage { dx: vec![0.0; n], dp: vec![0.0; n], ..Default::default() }
    }
}

/// Classical fourth-order Runge–Kutta stepper for the full second-order
/// system. Holds scratch buffers so repeated steps do not allocate.
#[derive(Clone, Debug, Default)]
pub struct FullStepper {
    stages: [Stage; 4],
    xs: Vec<f64>,
    ps: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    steps: u64,
}

impl FullStepper {
    pub fn new(n: usize) -> Self {
        FullStepper {
            stages: [Stage::sized(n), Stage::sized(n), Stage::sized(n), Stage::sized(n)],
            xs: vec![0.0; n],
            ps: vec![0.0; n],
            cos: vec![0.0; n],
            sin: vec![0.0; n],
            steps: 0,
        }
    }

    fn resize(&mut self, n: usize) {
        if self.xs.len() != n {
            *self = FullStepper { steps: self.steps, ..FullStepper::new(n) };
        }
    }

    /// Advances `state` by `dt`. `friction` adds a deterministic `−γ_fr p/m`
    /// drag; diffusion is not applied here.
    pub fn step(&mut self, state: &mut SystemState, model: &ModelParams, friction: f64, dt: f64) -> Result<()> {
        let n = state.ensemble.len();
        self.resize(n);
        let atom_number = state.ensemble.atom_number;
        let drag = friction / model.mass;
        let field0 = state.field;

        let weights = [0.0, 0.5, 0.5, 1.0];
        for s in 0..4 {
            let (field, use_tmp) = if s == 0 {
                (field0, false)
            } else {
                let prev = &self.stages[s - 1];
                let h = weights[s] * dt;
                for j in 0..n {
                    self.xs[j] = state.ensemble.positions[j] + h * prev.dx[j];
                    self.ps[j] = state.ensemble.momenta[j] + h * prev.dp[j];
                }
                (FieldState::new(field0.plus + h * prev.d_plus, field0.minus + h * prev.d_minus), true)
            };
            let (xs, ps) = if use_tmp {
                (&self.xs[..], &self.ps[..])
            } else {
                (&state.ensemble.positions[..], &state.ensemble.momenta[..])
            };
            let stage = &mut self.stages[s];
            evaluate_stage(model, &field, xs, ps, atom_number, drag, &mut self.cos, &mut self.sin, stage);
        }

        let [k1, k2, k3, k4] = &self.stages;
        let c = dt / 6.0;
        for j in 0..n {
            state.ensemble.positions[j] += c * (k1.dx[j] + 2.0 * k2.dx[j] + 2.0 * k3.dx[j] + k4.dx[j]);
            state.ensemble.momenta[j] += c * (k1.dp[j] + 2.0 * k2.dp[j] + 2.0 * k3.dp[j] + k4.dp[j]);
        }
        state.field.plus += c * (k1.d_plus + 2.0 * k2.d_plus + 2.0 * k3.d_plus + k4.d_plus);
        state.field.minus += c * (k1.d_minus + 2.0 * k2.d_minus + 2.0 * k3.d_minus + k4.d_minus);
        state.photon_transfer += c * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
        self.steps += 1;
        state.time += dt;

        if !state.is_finite() {
            return Err(CarlError::Divergence { step: self.steps, time: state.time });
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate_stage(
    model: &ModelParams,
    field: &FieldState,
    xs: &[f64],
    ps: &[f64],
    atom_number: f64,
    drag: f64,
    cos: &mut [f64],
    sin: &mut [f64],
    out: &mut Stage,
) {
    let k = model.wavenumber;
    let (mut re, mut im) = (0.0, 0.0);
    for (j, &x) in xs.iter().enumerate() {
        let (s, c) = (2.0 * k * x).sin_cos();
        cos[j] = c;
        sin[j] = s;
        re += c;
        im += s;
    }
    let weight = atom_number / xs.len() as f64;
    let atomic = Complex64::new(re, im) * (model.u0 * weight);
    let mirror = model
        .scatterers
        .as_ref()
        .map_or(Complex64::new(0.0, 0.0), |s| s.bunching(k) * s.collective_strength());
    let delta_c = match model.detuning {
        super::model::CavityDetuning::Tracking => atom_number * model.u0 * re / xs.len() as f64,
        _ => model.cavity_detuning(xs, atom_number),
    };
    let couplings = Couplings {
        detuned_shift: model.collective_shift(atom_number) - delta_c,
        atomic,
        total: atomic + mirror,
    };
    let (dp, dm) = field_rates(field, &couplings, model);
    out.d_plus = dp;
    out.d_minus = dm;
    out.dq = transfer_rate(field, &couplings);

    let z = field.plus.conj() * field.minus;
    let inv_m = 1.0 / model.mass;
    for j in 0..xs.len() {
        out.dx[j] = ps[j] * inv_m;
        out.dp[j] = force_from_phase(z, cos[j], sin[j], model.u0, k) - drag * ps[j];
    }
}

/// One RK4 step of the undamped equations (allocates scratch; use
/// [`FullStepper`] in loops).
pub fn step_full(state: &mut SystemState, model: &ModelParams, dt: f64) -> Result<()> {
    FullStepper::new(state.ensemble.len()).step(state, model, 0.0, dt)
}

/// One Euler–Maruyama step of the overdamped equations: particle inertia is
/// eliminated, `ẋ_n = (F_n + F_noise)/γ_fr`, and the fields take an explicit
/// Euler step. Momenta are overwritten with the drift momentum `m F_n/γ_fr`.
pub fn step_overdamped<R: Rng + ?Sized>(
    state: &mut SystemState,
    molasses: &MolassesModel,
    model: &ModelParams,
    dt: f64,
    rng: &mut R,
) -> Result<()> {
    if !(molasses.friction > 0.0) {
        return Err(CarlError::InvalidConfig(
            "overdamped stepping needs a positive friction coefficient; use the full integrator".into(),
        ));
    }
    let k = model.wavenumber;
    let couplings = Couplings::evaluate(model, &state.ensemble.positions, state.ensemble.atom_number);
    let (d_plus, d_minus) = field_rates(&state.field, &couplings, model);
    let z = state.field.plus.conj() * state.field.minus;
    let inv_gamma = 1.0 / molasses.friction;
    let kick = (2.0 * molasses.diffusion * dt).sqrt() * inv_gamma;
    let ens = &mut state.ensemble;
    for (x, p) in ens.positions.iter_mut().zip(ens.momenta.iter_mut()) {
        let (s, c) = (2.0 * k * *x).sin_cos();
        let drift = force_from_phase(z, c, s, model.u0, k) * inv_gamma;
        let noise = if kick > 0.0 {
            let xi: f64 = rng.sample(StandardNormal);
            kick * xi
        } else {
            0.0
        };
        *x += drift * dt + noise;
        *p = model.mass * drift;
    }
    state.photon_transfer += transfer_rate(&state.field, &couplings) * dt;
    state.field.plus += d_plus * dt;
    state.field.minus += d_minus * dt;
    state.time += dt;
    if !state.is_finite() {
        return Err(CarlError::Divergence { step: (state.time / dt).round() as u64, time: state.time });
    }
    Ok(())
}
