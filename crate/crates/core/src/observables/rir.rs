//! Recoil-induced-resonance velocimetry: lineshape synthesis and two-ensemble fits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::K_B;
use crate::error::{CarlError, Result};

use super::fit::{levenberg_marquardt, LmOptions};

/// Raman-beam geometry of the velocity probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RirModel {
    /// Raman wavenumber `k_rir` [1/m].
    pub k_rir: f64,
    /// Crossing angle `θ` [rad].
    pub theta: f64,
    /// Wavenumber `k` of the Doppler variable `kv` [1/m].
    pub wavenumber: f64,
    /// Atomic mass [kg].
    pub mass: f64,
    /// Overall signal constant `C`.
    pub scale: f64,
}

impl RirModel {
    pub fn new(k_rir: f64, theta: f64, mass: f64) -> Result<Self> {
        let m = RirModel { k_rir, theta, wavenumber: k_rir, mass, scale: 1.0 };
        m.validate()?;
        Ok(m)
    }

    /// Momentum transfer `q = 2k_rir sin(θ/2)`.
    pub fn momentum_transfer(&self) -> f64 {
        2.0 * self.k_rir * (0.5 * self.theta).sin()
    }

    /// Velocity class `v = Δ_rir/q` selected at Raman detuning `Δ_rir` [rad/s].
    pub fn selected_velocity(&self, raman_detuning: f64) -> f64 {
        raman_detuning / self.momentum_transfer()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.momentum_transfer() > 0.0) {
            return Err(CarlError::invalid("theta", "momentum transfer q must be positive"));
        }
        if !(self.wavenumber > 0.0 && self.mass > 0.0) {
            return Err(CarlError::invalid("rir", "wavenumber and mass must be positive"));
        }
        Ok(())
    }

    /// Doppler width `σ = √(2k_BT k²/m)` [rad/s].
    pub fn width(&self, temperature: f64) -> f64 {
        (2.0 * K_B * temperature / self.mass).sqrt() * self.wavenumber
    }

    fn temperature(&self, width: f64) -> f64 {
        width * width * self.mass / (2.0 * K_B * self.wavenumber * self.wavenumber)
    }
}

/// One thermal velocity class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RirEnsemble {
    pub atom_number: f64,
    /// [K]
    pub temperature: f64,
    /// Centre velocity [m/s].
    pub velocity: f64,
}

impl RirEnsemble {
    pub fn validate(&self) -> Result<()> {
        if !(self.atom_number >= 0.0) {
            return Err(CarlError::invalid("atom_number", "must be non-negative"));
        }
        if !(self.temperature > 0.0) {
            return Err(CarlError::invalid("temperature", "must be positive"));
        }
        Ok(())
    }
}

/// `Σ_j C N_j/(σ_j√2π) ∂_v exp(−(kv − kv_j)²/σ_j²)` on the velocity grid.
pub fn rir_spectrum(model: &RirModel, ensembles: &[RirEnsemble], velocities: &[f64]) -> Result<Vec<f64>> {
    model.validate()?;
    for e in ensembles {
        e.validate()?;
    }
    let k = model.wavenumber;
    Ok(velocities
        .iter()
        .map(|&v| {
            ensembles
                .iter()
                .map(|e| lobe(model.scale * e.atom_number, k * e.velocity, model.width(e.temperature), k, v))
                .sum()
        })
        .collect())
}

fn lobe(amplitude: f64, center: f64, sigma: f64, k: f64, v: f64) -> f64 {
    let u = (k * v - center) / sigma;
    amplitude / (sigma * (2.0 * PI).sqrt()) * (-2.0 * k * u / sigma) * (-u * u).exp()
}

/// Starting point for [`fit_rir`]; ensemble order does not matter.
pub type RirGuess = [RirEnsemble; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RirFit {
    /// Ensembles ordered by increasing centre velocity.
    pub ensembles: [RirEnsemble; 2],
    /// `Δ(kv) = kv₂ − kv₁` [rad/s].
    pub doppler_shift: f64,
    /// Root-mean-square residual in signal units.
    pub rms_residual: f64,
    /// One component is empty or both sit at the same velocity.
    pub degenerate: bool,
    /// The grid search supplied the starting point.
    pub from_grid: bool,
}

/// Fraction of the total amplitude below which a component counts as empty.
const EMPTY_FRACTION: f64 = 0.02;
/// Centre separation, in units of the narrower width, below which the components coincide.
const COINCIDENT_SEPARATION: f64 = 0.1;

/// Least-squares fit of two ensembles. Without a guess, or when the
/// refinement from the guess ends worse than the grid optimum, the
/// coarse grid search seeds the refinement.
pub fn fit_rir(model: &RirModel, velocities: &[f64], signal: &[f64], guess: Option<&RirGuess>) -> Result<RirFit> {
    model.validate()?;
    check_series(velocities, signal)?;
    let norm = Normalization::new(model, velocities, signal);
    let grid = grid_search(model, velocities, signal, &norm)?;
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut last_err = None;
    let mut starts = Vec::new();
    if let Some(g) = guess {
        starts.push((norm.encode(model, g), false));
    }
    starts.push((grid, true));
    for (start, from_grid) in starts {
        match refine(model, velocities, signal, &norm, &start) {
            Ok((p, cost)) => {
                if best.as_ref().is_none_or(|b| cost < b.1 * (1.0 - 1e-9)) {
                    best = Some((p, cost, from_grid));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (p, cost, from_grid) = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or(CarlError::FitFailure { iterations: 0, residual: f64::NAN })),
    };
    Ok(finish(model, &norm, &p, cost, signal.len(), from_grid))
}

/// Grid-search estimate alone, without refinement.
pub fn fit_rir_grid(model: &RirModel, velocities: &[f64], signal: &[f64]) -> Result<RirFit> {
    model.validate()?;
    check_series(velocities, signal)?;
    let norm = Normalization::new(model, velocities, signal);
    let p = grid_search(model, velocities, signal, &norm)?;
    let cost = cost_of(model, velocities, signal, &norm, &p);
    Ok(finish(model, &norm, &p, cost, signal.len(), true))
}

fn check_series(velocities: &[f64], signal: &[f64]) -> Result<()> {
    if velocities.len() != signal.len() {
        return Err(CarlError::invalid("signal", "velocities and values differ in length"));
    }
    if velocities.len() < 12 {
        return Err(CarlError::invalid("signal", "need at least 12 samples for a six-parameter fit"));
    }
    Ok(())
}

/// Rescales parameters to order one: Doppler variables by the span of the
/// grid, amplitudes by the signal peak.
struct Normalization {
    omega: f64,
    amplitude: f64,
}

impl Normalization {
    fn new(model: &RirModel, velocities: &[f64], signal: &[f64]) -> Self {
        let (lo, hi) = velocities.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let omega = model.wavenumber * (hi - lo).max(f64::MIN_POSITIVE);
        let peak = signal.iter().fold(0.0f64, |a, s| a.max(s.abs())).max(f64::MIN_POSITIVE);
        // a unit-amplitude lobe of width ω peaks at about k/ω² · 0.48
        let amplitude = peak * omega * omega / model.wavenumber;
        Normalization { omega, amplitude }
    }

    fn encode(&self, model: &RirModel, g: &RirGuess) -> Vec<f64> {
        let k = model.wavenumber;
        g.iter()
            .flat_map(|e| {
                [
                    model.scale * e.atom_number / self.amplitude,
                    k * e.velocity / self.omega,
                    model.width(e.temperature) / self.omega,
                ]
            })
            .collect()
    }
}

fn model_value(model: &RirModel, norm: &Normalization, p: &[f64], v: f64) -> f64 {
    let k = model.wavenumber;
    (0..2)
        .map(|j| {
            lobe(p[3 * j] * norm.amplitude, p[3 * j + 1] * norm.omega, p[3 * j + 2].abs() * norm.omega, k, v)
        })
        .sum()
}

fn cost_of(model: &RirModel, velocities: &[f64], signal: &[f64], norm: &Normalization, p: &[f64]) -> f64 {
    velocities.iter().zip(signal).map(|(&v, s)| (model_value(model, norm, p, v) - s).powi(2)).sum()
}

fn refine(
    model: &RirModel,
    velocities: &[f64],
    signal: &[f64],
    norm: &Normalization,
    start: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let peak = signal.iter().fold(0.0f64, |a, s| a.max(s.abs())).max(f64::MIN_POSITIVE);
    let report = levenberg_marquardt(
        |p, r| {
            for (i, (&v, s)) in velocities.iter().zip(signal).enumerate() {
                r[i] = (model_value(model, norm, p, v) - s) / peak;
            }
        },
        start,
        velocities.len(),
        LmOptions::default(),
    )?;
    Ok((report.params, report.cost * peak * peak))
}

/// Variable projection over a grid of centres and widths: for every pair
/// of lobes the two amplitudes follow from linear least squares.
fn grid_search(model: &RirModel, velocities: &[f64], signal: &[f64], norm: &Normalization) -> Result<Vec<f64>> {
    const CENTRES: usize = 41;
    const WIDTHS: usize = 14;
    let k = model.wavenumber;
    let (lo, hi) = velocities.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let span = k * (hi - lo);
    let mut basis = Vec::with_capacity(CENTRES * WIDTHS);
    for ci in 0..CENTRES {
        let c = k * lo + span * ci as f64 / (CENTRES - 1) as f64;
        for wi in 0..WIDTHS {
            // widths from span/200 to span/2, log-spaced
            let s = span / 200.0 * 100f64.powf(wi as f64 / (WIDTHS - 1) as f64);
            let g: Vec<f64> = velocities.iter().map(|&v| lobe(1.0, c, s, k, v)).collect();
            let gy: f64 = g.iter().zip(signal).map(|(a, b)| a * b).sum();
            let gg: f64 = g.iter().map(|a| a * a).sum();
            basis.push((c, s, g, gy, gg));
        }
    }
    let yy: f64 = signal.iter().map(|s| s * s).sum();
    let mut best = (f64::MAX, [0.0; 6]);
    for i in 0..basis.len() {
        let (ci, si, gi, gyi, ggi) = &basis[i];
        // single lobe as a candidate too
        if *ggi > 0.0 {
            let a = (gyi / ggi).max(0.0);
            let cost = yy - 2.0 * a * gyi + a * a * ggi;
            if cost < best.0 {
                best = (cost, [a, *ci, *si, 0.0, *ci, *si]);
            }
        }
        for j in i + 1..basis.len() {
            let (cj, sj, gj, gyj, ggj) = &basis[j];
            if (ci - cj).abs() < 1e-12 * span {
                continue;
            }
            let gij: f64 = gi.iter().zip(gj).map(|(a, b)| a * b).sum();
            let det = ggi * ggj - gij * gij;
            if det <= 1e-12 * ggi * ggj {
                continue;
            }
            let ai = (gyi * ggj - gyj * gij) / det;
            let aj = (gyj * ggi - gyi * gij) / det;
            if ai < 0.0 || aj < 0.0 {
                continue;
            }
            let cost = yy - 2.0 * (ai * gyi + aj * gyj) + ai * ai * ggi + aj * aj * ggj + 2.0 * ai * aj * gij;
            if cost < best.0 {
                best = (cost, [ai, *ci, *si, aj, *cj, *sj]);
            }
        }
    }
    if best.0 == f64::MAX {
        return Err(CarlError::FitFailure { iterations: 0, residual: yy });
    }
    let b = best.1;
    Ok(vec![
        b[0] / norm.amplitude,
        b[1] / norm.omega,
        b[2] / norm.omega,
        b[3] / norm.amplitude,
        b[4] / norm.omega,
        b[5] / norm.omega,
    ])
}

fn finish(model: &RirModel, norm: &Normalization, p: &[f64], cost: f64, n: usize, from_grid: bool) -> RirFit {
    let k = model.wavenumber;
    let mut ens: Vec<RirEnsemble> = (0..2)
        .map(|j| RirEnsemble {
            atom_number: p[3 * j] * norm.amplitude / model.scale,
            temperature: model.temperature(p[3 * j + 2].abs() * norm.omega),
            velocity: p[3 * j + 1] * norm.omega / k,
        })
        .collect();
    ens.sort_by(|a, b| a.velocity.total_cmp(&b.velocity));
    let total = ens[0].atom_number.abs() + ens[1].atom_number.abs();
    let narrow = model.width(ens[0].temperature).min(model.width(ens[1].temperature));
    let separation = k * (ens[1].velocity - ens[0].velocity);
    let degenerate = ens.iter().any(|e| e.atom_number < EMPTY_FRACTION * total)
        || separation < COINCIDENT_SEPARATION * narrow;
    RirFit {
        ensembles: [ens[0], ens[1]],
        doppler_shift: separation,
        rms_residual: (cost / n as f64).sqrt(),
        degenerate,
        from_grid,
    }
}
