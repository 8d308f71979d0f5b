//! Coupled atom–field dynamics for weighted macro-particle ensembles.
//!
//! Two integrators are provided: a classical RK4 scheme for the full
//! second-order equations, and an Euler–Maruyama scheme for the overdamped
//! Langevin equations that hold while a molasses provides strong friction.

mod integrate;
mod model;
mod run;
mod state;

pub use integrate::{dipole_force, field_derivative, photon_transfer_rate, step_full, step_overdamped, FullStepper};
pub use model::{CavityDetuning, MirrorScatterers, ModelParams, MolassesModel};
pub use run::{
    check_stability, run, run_from_state, validate_schedule, Action, InitialSpec, Integrator, PumpStart, Schedule,
    ScheduleEvent, SimConfig, SimTrace, Snapshot, SpatialDistribution, STABILITY_LIMIT,
};
pub(crate) use state::phasor_sum;
pub use state::{apply_phase_lock, FieldState, ParticleEnsemble, SystemState};
