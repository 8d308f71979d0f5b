use carl_core::constants::K_B;
use carl_core::dynamics::{
    run, Action, InitialSpec, Integrator, ModelParams, MolassesModel, PumpStart, ScheduleEvent, SimConfig,
    SpatialDistribution,
};
use carl_core::params::PhysicalParams;

fn model(pump_photons: f64) -> ModelParams {
    let p = PhysicalParams::rb85_paper();
    let d = p.derive().unwrap();
    let mut m = ModelParams::from_physical(&p, &d);
    m.pump = m.kappa * pump_photons.sqrt();
    m
}

fn config(dt: f64, duration: f64, integrator: Integrator) -> SimConfig {
    SimConfig { dt, duration, integrator, seed: 7, phase_lock: true, sample_stride: usize::MAX, snapshot_stride: None }
}

fn cloud(n_sim: usize, temperature: f64) -> InitialSpec {
    InitialSpec {
        n_sim,
        atom_number: 1e6,
        distribution: SpatialDistribution::Homogeneous { length: 100e-6, center: 0.0 },
        temperature,
        probe_photons: 1e4,
        probe_phase: Some(0.4),
        velocity: 0.0,
        pump_start: PumpStart::Steady,
    }
}

#[test]
fn rk4_error_shrinks_sixteenfold_per_halving() {
    let m = model(1e10);
    // short horizon: at this pump the atomic motion is chaotic over a few 1/κ
    let duration = 0.16 / m.kappa;
    let probe = |dt: f64| {
        let mut c = config(dt, duration, Integrator::Full);
        c.snapshot_stride = Some(usize::MAX);
        let t = run(&c, &m, &cloud(16, 20e-6), &[]).unwrap();
        let x = t.snapshots.last().unwrap().positions.clone();
        (*t.alpha_minus.last().unwrap(), x)
    };
    let dt = 0.02 / m.kappa;
    let (a1, x1) = probe(dt);
    let (a2, x2) = probe(dt / 2.0);
    let (a3, x3) = probe(dt / 4.0);
    let ratio_field = (a1 - a2).norm() / (a2 - a3).norm();
    let dx = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let ratio_x = dx(&x1, &x2) / dx(&x2, &x3);
    assert!((12.0..20.0).contains(&ratio_field), "field ratio {ratio_field}");
    assert!((12.0..20.0).contains(&ratio_x), "position ratio {ratio_x}");
}

#[test]
fn free_full_dynamics_conserve_kinetic_energy() {
    let mut m = model(1e8);
    m.u0 = 0.0;
    let mut c = config(1e-7, 1e-4, Integrator::Full);
    c.sample_stride = 100;
    c.snapshot_stride = Some(100);
    let t = run(&c, &m, &cloud(50, 30e-6), &[]).unwrap();
    let ke = |p: &[f64]| p.iter().map(|p| p * p).sum::<f64>();
    let e0 = ke(&t.snapshots[0].momenta);
    for s in &t.snapshots {
        assert!((ke(&s.momenta) / e0 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn overdamped_variance_grows_at_two_d_over_gamma_squared() {
    let mut m = model(0.0);
    m.u0 = 0.0;
    let gamma = 1e6 * m.mass;
    let molasses = MolassesModel::at_temperature(gamma, 10e-6);
    let mut c = config(1e-8, 2e-6, Integrator::Overdamped);
    c.snapshot_stride = Some(50);
    let mut initial = cloud(4000, 0.0);
    initial.distribution = SpatialDistribution::PerfectlyBunched { position: 0.0 };
    initial.probe_photons = 0.0;
    let schedule = [ScheduleEvent { time: 0.0, action: Action::MolassesOn { molasses } }];
    let t = run(&c, &m, &initial, &schedule).unwrap();
    let (times, vars): (Vec<f64>, Vec<f64>) = t
        .snapshots
        .iter()
        .map(|s| {
            let n = s.positions.len() as f64;
            let mean = s.positions.iter().sum::<f64>() / n;
            (s.time, s.positions.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n)
        })
        .unzip();
    // least-squares slope through the origin
    let slope = times.iter().zip(&vars).map(|(t, v)| t * v).sum::<f64>() / times.iter().map(|t| t * t).sum::<f64>();
    let expected = 2.0 * molasses.diffusion / (gamma * gamma);
    assert!((slope / expected - 1.0).abs() < 0.05, "slope {slope:e} vs {expected:e}");
}

#[test]
fn full_langevin_thermalizes_at_the_molasses_temperature() {
    let mut m = model(0.0);
    m.u0 = 0.0;
    let temperature = 10e-6;
    let molasses = MolassesModel::at_temperature(1e6 * m.mass, temperature);
    let mut c = config(1e-8, 3e-5, Integrator::Full);
    c.snapshot_stride = Some(100);
    let mut initial = cloud(5000, 0.0);
    initial.probe_photons = 0.0;
    let schedule = [ScheduleEvent { time: 0.0, action: Action::MolassesOn { molasses } }];
    let t = run(&c, &m, &initial, &schedule).unwrap();
    // average over the last third, well past the 1 µs relaxation time
    let tail = &t.snapshots[2 * t.snapshots.len() / 3..];
    let p2: f64 = tail
        .iter()
        .map(|s| s.momenta.iter().map(|p| p * p).sum::<f64>() / s.momenta.len() as f64)
        .sum::<f64>()
        / tail.len() as f64;
    let ratio = p2 / (m.mass * K_B * temperature);
    assert!((ratio - 1.0).abs() < 0.05, "<p^2>/(m kT) = {ratio}");
}
