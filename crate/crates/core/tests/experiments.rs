use carl_core::experiments::{
    desk_molasses, find_threshold, fit_power_law, run_scenario, BunchingCriterion, ModelOverrides, ScanAxis,
    Scenario, ThresholdSpec,
};

#[test]
fn fig2_beat_appears_and_holds_its_frequency() {
    let out = run_scenario(&Scenario::preset("fig2").unwrap()).unwrap();
    assert!(out.summary.ordered);
    let t_end = *out.trace.times.last().unwrap();
    let late: Vec<f64> = out.spectrum.iter().filter(|e| e.time > 0.3 * t_end).map(|e| e.frequency).collect();
    assert!(out.spectrum.iter().filter(|e| e.time > 0.3 * t_end).all(|e| e.present));
    let mean = late.iter().sum::<f64>() / late.len() as f64;
    assert!(late.iter().all(|f| (f / mean - 1.0).abs() < 0.05), "{late:?}");
    // the cloud starts disordered
    assert!(out.trace.bunching[0] < 0.1);
}

#[test]
fn fig3_chirps_as_cube_root_after_release() {
    let s = Scenario::preset("fig3").unwrap();
    let release = s.schedule.iter().map(|e| e.time).fold(0.0, f64::max);
    let kappa = s.model().unwrap().kappa;
    let out = run_scenario(&s).unwrap();
    let late: Vec<_> = out.spectrum.iter().filter(|e| e.present && e.time > release + 20.0 / kappa).collect();
    let x: Vec<f64> = late.iter().map(|e| e.time - release).collect();
    let y: Vec<f64> = late.iter().map(|e| e.frequency).collect();
    let fit = fit_power_law(&x, &y).unwrap();
    assert!((fit.exponent - 1.0 / 3.0).abs() < 0.03, "exponent {}", fit.exponent);
    // the fringe contrast falls while the frequency rises
    let c: Vec<f64> = late.iter().map(|e| e.contrast).collect();
    let fc = fit_power_law(&x, &c).unwrap();
    assert!(fc.exponent < -0.1, "contrast exponent {}", fc.exponent);
}

#[test]
fn threshold_collapses_without_diffusion() {
    let s = Scenario::preset("fig2").unwrap();
    let physical = s.physical().unwrap();
    let mass = physical.species.mass;
    let mut spec = ThresholdSpec {
        physical,
        overrides: ModelOverrides::default(),
        config: s.config.clone(),
        initial: s.initial.clone(),
        molasses: desk_molasses(mass, true),
        criterion: BunchingCriterion::default(),
        seeds: 3,
        bracket: [1e-5, 2.0],
        tolerance: 0.1,
    };
    let axis = ScanAxis::Atoms(vec![1e6]);
    let noisy = find_threshold(&spec, &axis, 1e6).unwrap();
    spec.molasses = desk_molasses(mass, false);
    let quiet = find_threshold(&spec, &axis, 1e6).unwrap();
    assert!(quiet.threshold < 0.1 * noisy.threshold, "{} W vs {} W", quiet.threshold, noisy.threshold);
}
