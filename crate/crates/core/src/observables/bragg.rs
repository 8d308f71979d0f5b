//! Bragg scattering off a moving lattice: Doppler shift, heterodyne
//! synthesis and quadrature demodulation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CarlError, Result};

/// Samples per reference period below which the `2ω` product term aliases
/// into the demodulation band.
pub const DEMOD_MIN_SAMPLES_PER_PERIOD: f64 = 4.0;

/// `Δω_s = Δω_j − 2k_dip v` [rad/s].
pub fn bragg_doppler_shift(probe_offset: f64, k_dip: f64, velocity: f64) -> f64 {
    probe_offset - 2.0 * k_dip * velocity
}

/// Lattice velocity from measured probe and Bragg beat frequencies.
pub fn lattice_velocity(probe_offset: f64, bragg_offset: f64, k_dip: f64) -> Result<f64> {
    if k_dip == 0.0 {
        return Err(CarlError::Singularity("k_dip = 0 in the lattice velocity"));
    }
    Ok((probe_offset - bragg_offset) / (2.0 * k_dip))
}

/// Mean of the up-scan and down-scan estimates; a delay that shifts the two
/// scans in opposite directions cancels.
pub fn retardation_corrected(up_scan: f64, down_scan: f64) -> f64 {
    0.5 * (up_scan + down_scan)
}

/// Frequencies are offsets from a common optical carrier, so only
/// differences enter the signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BraggConfig {
    /// Probe frequency `ω_j` [rad/s].
    pub omega_j: f64,
    /// Reference frequency `ω_r` [rad/s].
    pub omega_r: f64,
    /// Lattice wavenumber `k_dip` [1/m].
    pub k_dip: f64,
    /// Lattice velocity [m/s].
    pub velocity: f64,
    /// Probe field amplitude `E_j0`.
    pub e_j0: f64,
    /// Reference field amplitude `E_r0`.
    pub e_r0: f64,
}

impl BraggConfig {
    /// Scattered frequency `ω_s = ω_j − 2k_dip v`.
    pub fn omega_s(&self) -> f64 {
        self.omega_j - 2.0 * self.k_dip * self.velocity
    }

    /// Bragg beat frequency `ω_s − ω_r`.
    pub fn beat_frequency(&self) -> f64 {
        self.omega_s() - self.omega_r
    }

    /// Weak-scatterer condition `|r| E_j0 ≪ E_r0`, checked at the given margin.
    pub fn is_weak(&self, r_max: f64, margin: f64) -> bool {
        r_max * self.e_j0 < margin * self.e_r0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneResult {
    pub times: Vec<f64>,
    /// Exact `|E_r + E_s|²`.
    pub signal: Vec<f64>,
    /// Exact minus the weak-scatterer form `E_r0² + 2AE_r0E_j0 cos(...)`.
    pub residual: Vec<f64>,
}

/// Beat of the reference with the scattered field `E_s = r(t) E_j0 e^{iω_s t}`.
pub fn heterodyne_beat(config: &BraggConfig, times: &[f64], r: &[Complex64]) -> Result<HeterodyneResult> {
    if times.len() != r.len() {
        return Err(CarlError::invalid("r", "profile and time grid differ in length"));
    }
    let (ws, wr) = (config.omega_s(), config.omega_r);
    let mut out = HeterodyneResult::default();
    for (&t, &rt) in times.iter().zip(r) {
        let er = Complex64::from_polar(config.e_r0, wr * t);
        let es = rt * config.e_j0 * Complex64::from_polar(1.0, ws * t);
        let exact = (er + es).norm_sqr();
        let approx = config.e_r0 * config.e_r0
            + 2.0 * rt.norm() * config.e_r0 * config.e_j0 * ((ws - wr) * t + rt.arg()).cos();
        out.times.push(t);
        out.signal.push(exact);
        out.residual.push(exact - approx);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DemodResult {
    pub times: Vec<f64>,
    /// Amplitude `a` of the `a cos(ωt + φ)` component.
    pub amplitude: Vec<f64>,
    /// Phase in `(−π, π]`.
    pub phase: Vec<f64>,
}

/// Mixes `signal` with `2cos(ωt)` and `−2sin(ωt)` and low-pass filters both
/// products with a zero-phase Blackman-windowed sinc of cutoff
/// `bandwidth/2` whose transition ends at `bandwidth` [rad/s].
pub fn quadrature_demod(times: &[f64], signal: &[f64], reference: f64, bandwidth: f64) -> Result<DemodResult> {
    if times.len() != signal.len() || times.len() < 2 {
        return Err(CarlError::invalid("signal", "need matching time and value series of length ≥ 2"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(CarlError::invalid("times", "must increase"));
    }
    let per_period = 2.0 * PI / (reference.abs() * dt);
    if per_period < DEMOD_MIN_SAMPLES_PER_PERIOD {
        return Err(CarlError::Aliasing { samples_per_period: per_period, required: DEMOD_MIN_SAMPLES_PER_PERIOD });
    }
    if !(bandwidth > 0.0) || bandwidth > 0.5 * reference.abs() {
        return Err(CarlError::invalid("bandwidth", "must be positive and below half the reference frequency"));
    }
    let kernel = blackman_lowpass(0.5 * bandwidth * dt, 2.0 * PI * 5.5 / (bandwidth * dt));
    let mut i_mix = Vec::with_capacity(signal.len());
    let mut q_mix = Vec::with_capacity(signal.len());
    for (&t, &s) in times.iter().zip(signal) {
        let (sn, cs) = (reference * t).sin_cos();
        i_mix.push(2.0 * s * cs);
        q_mix.push(-2.0 * s * sn);
    }
    let i_f = convolve_same(&i_mix, &kernel);
    let q_f = convolve_same(&q_mix, &kernel);
    let mut out = DemodResult { times: times.to_vec(), ..Default::default() };
    for (i, q) in i_f.into_iter().zip(q_f) {
        out.amplitude.push(i.hypot(q));
        out.phase.push(wrap_phase(q.atan2(i)));
    }
    Ok(out)
}

/// Maps atan2's `[−π, π]` onto `(−π, π]`.
fn wrap_phase(p: f64) -> f64 {
    if p <= -PI {
        p + 2.0 * PI
    } else {
        p
    }
}

/// Odd-length kernel with unit DC gain; `cutoff` in radians per sample,
/// `length` in samples.
fn blackman_lowpass(cutoff: f64, length: f64) -> Vec<f64> {
    let half = (0.5 * length).ceil().max(1.0) as usize;
    let m = 2 * half;
    let mut h: Vec<f64> = (0..=m)
        .map(|n| {
            let x = n as f64 - half as f64;
            let sinc = if x == 0.0 { cutoff / PI } else { (cutoff * x).sin() / (PI * x) };
            let a = 2.0 * PI * n as f64 / m as f64;
            sinc * (0.42 - 0.5 * a.cos() + 0.08 * (2.0 * a).cos())
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Centred convolution; near the ends the kernel is truncated and renormalized.
fn convolve_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    let half = h.len() / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let (mut acc, mut w) = (0.0, 0.0);
            for j in lo..=hi {
                let tap = h[j + half - i];
                acc += tap * x[j];
                w += tap;
            }
            acc / w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::angular;

    #[test]
    fn doppler_examples() {
        let k = 2.0 * PI / 797e-9;
        let v = angular(37e3) / (2.0 * k);
        let s = bragg_doppler_shift(angular(53e3), k, v);
        assert!((s - angular(16e3)).abs() < 1e-9);
        assert_eq!(bragg_doppler_shift(5.0, k, 0.0), 5.0);
        let back = lattice_velocity(angular(53e3), s, k).unwrap();
        assert!((back / v - 1.0).abs() < 1e-12);
        assert!(lattice_velocity(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn retardation_cancels_antisymmetric_delay() {
        assert_eq!(retardation_corrected(10.0 + 0.3, 10.0 - 0.3), 10.0);
    }

    fn cfg() -> BraggConfig {
        BraggConfig { omega_j: angular(53e3), omega_r: 0.0, k_dip: 7.9e6, velocity: 0.0, e_j0: 1.0, e_r0: 10.0 }
    }

    #[test]
    fn zero_reflectivity_is_flat() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64 * 1e-7).collect();
        let r = vec![Complex64::new(0.0, 0.0); t.len()];
        let h = heterodyne_beat(&cfg(), &t, &r).unwrap();
        assert!(h.signal.iter().all(|s| (s - 100.0).abs() < 1e-12));
    }

    #[test]
    fn static_reflectivity_beats_at_the_offset() {
        let c = cfg();
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 1e-7).collect();
        let r0 = Complex64::from_polar(0.05, 0.4);
        let h = heterodyne_beat(&c, &t, &vec![r0; t.len()]).unwrap();
        for (i, &tt) in t.iter().enumerate() {
            let expect = 100.0 + 0.0025 + 2.0 * 0.05 * 10.0 * (c.omega_j * tt + 0.4).cos();
            assert!((h.signal[i] - expect).abs() < 1e-10);
            assert!((h.residual[i] - 0.0025).abs() < 1e-10);
        }
    }

    #[test]
    fn demod_recovers_constant_tone() {
        let w = angular(53e3);
        let dt = 2e-7;
        let t: Vec<f64> = (0..20000).map(|i| i as f64 * dt).collect();
        for &phi in &[0.3, -2.0, PI] {
            let s: Vec<f64> = t.iter().map(|t| 7.0 + 1.5 * (w * t + phi).cos()).collect();
            let d = quadrature_demod(&t, &s, w, angular(5e3)).unwrap();
            for i in 5000..15000 {
                assert!((d.amplitude[i] / 1.5 - 1.0).abs() < 1e-3);
                let dp = wrap_phase((d.phase[i] - phi + PI).rem_euclid(2.0 * PI) - PI);
                assert!(dp.abs() < 1e-3);
            }
        }
    }

    #[test]
    fn demod_rejects_undersampling() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 1e-5).collect();
        let s = vec![0.0; 100];
        assert!(matches!(
            quadrature_demod(&t, &s, angular(53e3), angular(1e3)),
            Err(CarlError::Aliasing { .. })
        ));
    }

    #[test]
    fn phase_is_in_half_open_interval() {
        assert_eq!(wrap_phase(-PI), PI);
        assert_eq!(wrap_phase(PI), PI);
    }
}
