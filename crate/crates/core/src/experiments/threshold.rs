//! Pump-power threshold for self-organization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run, Action, InitialSpec, ModelParams, MolassesModel, ScheduleEvent, SimConfig};
use crate::error::{CarlError, Result};
use crate::params::{intracavity_photons, PhysicalParams};

use super::scenario::{steady_bunching, ModelOverrides};
use super::stats::spearman;

/// Ordered iff the median bunching over the trailing `tail_fraction` of a run
/// exceeds `level` on at least `seed_fraction` of the seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BunchingCriterion {
    pub level: f64,
    pub tail_fraction: f64,
    pub seed_fraction: f64,
}

impl Default for BunchingCriterion {
    fn default() -> Self {
        BunchingCriterion { level: 0.5, tail_fraction: 0.2, seed_fraction: 0.5 }
    }
}

impl BunchingCriterion {
    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CarlError::invalid("level", "must lie in (0, 1)"));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(CarlError::invalid("tail_fraction", "must lie in (0, 1]"));
        }
        if !(self.seed_fraction > 0.0 && self.seed_fraction <= 1.0) {
            return Err(CarlError::invalid("seed_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "axis", content = "values")]
pub enum ScanAxis {
    /// Laser detunings from D1 [rad/s].
    Detuning(Vec<f64>),
    /// Represented atom numbers.
    Atoms(Vec<f64>),
}

impl ScanAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            ScanAxis::Detuning(v) | ScanAxis::Atoms(v) => v,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScanAxis::Detuning(_) => "detuning",
            ScanAxis::Atoms(_) => "atoms",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub physical: PhysicalParams,
    #[serde(default)]
    pub overrides: ModelOverrides,
    pub config: SimConfig,
    pub initial: InitialSpec,
    pub molasses: MolassesModel,
    #[serde(default)]
    pub criterion: BunchingCriterion,
    /// Seeds `base_seed, base_seed + 1, ...` are shared by every grid point and power.
    pub seeds: usize,
    /// Intracavity pump power bracket `[lo, hi]` [W].
    pub bracket: [f64; 2],
    /// Relative bracket width at which bisection stops.
    pub tolerance: f64,
}

impl ThresholdSpec {
    pub fn validate(&self) -> Result<()> {
        self.criterion.validate()?;
        self.config.validate()?;
        self.initial.validate()?;
        self.molasses.validate()?;
        if self.seeds == 0 {
            return Err(CarlError::invalid("seeds", "need at least one seed"));
        }
        let [lo, hi] = self.bracket;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(CarlError::invalid("bracket", "need 0 < lo < hi"));
        }
        if !(self.tolerance > 0.0) {
            return Err(CarlError::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub axis_value: f64,
    /// Geometric centre of the final bracket [W].
    pub threshold: f64,
    /// Final bracket [W].
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub axis: String,
    pub points: Vec<ThresholdPoint>,
    pub criterion: BunchingCriterion,
    pub seeds: usize,
    /// Spearman correlation of `|axis value|` with the threshold.
    pub spearman: Option<f64>,
    /// Thresholds are strictly monotone along the grid, pointwise.
    pub strictly_monotone: bool,
}

/// Model and initial state at intracavity pump power `power`.
fn setup(spec: &ThresholdSpec, axis: &ScanAxis, value: f64, power: f64) -> Result<(ModelParams, InitialSpec, f64)> {
    let mut physical = spec.physical;
    let mut initial = spec.initial.clone();
    match axis {
        ScanAxis::Detuning(_) => physical = physical.with_detuning_d1(value),
        ScanAxis::Atoms(_) => initial.atom_number = value,
    }
    let derived = physical.derive()?;
    let mut model = ModelParams::from_physical(&physical, &derived);
    spec.overrides.apply(&mut model)?;
    let photons = intracavity_photons(power, physical.laser.omega, derived.free_spectral_range);
    model.pump = model.kappa * photons.sqrt();
    Ok((model, initial, photons))
}

/// Whether the criterion holds at `power` for the grid point `value`.
pub fn is_ordered(spec: &ThresholdSpec, axis: &ScanAxis, value: f64, power: f64) -> Result<bool> {
    let (model, initial, _) = setup(spec, axis, value, power)?;
    let schedule = [ScheduleEvent { time: 0.0, action: Action::MolassesOn { molasses: spec.molasses } }];
    let c = spec.criterion;
    let ordered: Result<Vec<bool>> = (0..spec.seeds)
        .into_par_iter()
        .map(|i| {
            let mut config = spec.config.clone();
            config.seed = spec.config.seed.wrapping_add(i as u64);
            let trace = run(&config, &model, &initial, &schedule)?;
            Ok(steady_bunching(&trace, c.tail_fraction) > c.level)
        })
        .collect();
    let hits = ordered?.into_iter().filter(|&b| b).count();
    Ok(hits as f64 >= c.seed_fraction * spec.seeds as f64)
}

/// Geometric bisection of a predicate that is false below and true above a
/// crossing inside `[lo, hi]`. Each iteration halves `ln(hi/lo)`.
pub fn bisect<F>(mut lo: f64, mut hi: f64, tolerance: f64, mut above: F) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<bool>,
{
    let mut evaluations = 2;
    if above(lo)? {
        return Err(CarlError::Bracket { lo, hi, detail: "already above threshold at the lower end".into() });
    }
    if !above(hi)? {
        return Err(CarlError::Bracket { lo, hi, detail: "still below threshold at the upper end".into() });
    }
    while hi / lo > 1.0 + tolerance {
        let mid = (lo * hi).sqrt();
        evaluations += 1;
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi, evaluations))
}

pub fn find_threshold(spec: &ThresholdSpec, axis: &ScanAxis, value: f64) -> Result<ThresholdPoint> {
    let [lo, hi] = spec.bracket;
    let (lo, hi, evaluations) = bisect(lo, hi, spec.tolerance, |p| is_ordered(spec, axis, value, p))
        .map_err(|e| e.context(format!("{} = {value:e}", axis.name())))?;
    Ok(ThresholdPoint { axis_value: value, threshold: (lo * hi).sqrt(), lo, hi, evaluations })
}

/// Threshold at every grid point. Points and seeds run on the current rayon
/// pool; results are keyed by grid position.
pub fn threshold_scan(spec: &ThresholdSpec, axis: &ScanAxis) -> Result<ThresholdResult> {
    spec.validate()?;
    if axis.values().is_empty() {
        return Err(CarlError::invalid("axis", "empty grid"));
    }
    let points: Result<Vec<ThresholdPoint>> =
        axis.values().par_iter().map(|&v| find_threshold(spec, axis, v)).collect();
    let points = points?;
    let x: Vec<f64> = points.iter().map(|p| p.axis_value.abs()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.threshold).collect();
    let rho = spearman(&x, &y);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let strictly_monotone =
        ys.windows(2).all(|w| w[1] > w[0]) || ys.windows(2).all(|w| w[1] < w[0]);
    Ok(ThresholdResult {
        axis: axis.name().into(),
        points,
        criterion: spec.criterion,
        seeds: spec.seeds,
        spearman: rho,
        strictly_monotone,
    })
}

/// Runs `f` on a pool of `jobs` threads (all cores if `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CarlError::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_converges_independently_of_bracket() {
        let truth = 0.37;
        let (lo, hi, n) = bisect(1e-3, 10.0, 0.02, |p| Ok(p > truth)).unwrap();
        assert!(lo <= truth && truth <= hi && hi / lo <= 1.02);
        let (lo2, hi2, _) = bisect(0.1, 2.0, 0.02, |p| Ok(p > truth)).unwrap();
        assert!(((lo * hi).sqrt() / (lo2 * hi2).sqrt() - 1.0).abs() < 0.02);
        // ln(hi/lo) halves every step
        let steps = ((10.0f64 / 1e-3).ln() / 1.02f64.ln()).log2().ceil() as usize;
        assert_eq!(n, steps + 2);
    }

    #[test]
    fn bracket_failures_are_reported() {
        assert!(matches!(bisect(1.0, 2.0, 0.02, |_| Ok(true)), Err(CarlError::Bracket { .. })));
        assert!(matches!(bisect(1.0, 2.0, 0.02, |_| Ok(false)), Err(CarlError::Bracket { .. })));
    }

    #[test]
    fn criterion_validation() {
        assert!(BunchingCriterion::default().validate().is_ok());
        assert!(BunchingCriterion { level: 1.0, ..Default::default() }.validate().is_err());
    }
}
