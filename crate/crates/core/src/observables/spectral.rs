//! Short-time Fourier analysis of beat signals.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{CarlError, Result};

/// Fewest samples a window may hold.
pub const MIN_WINDOW_SAMPLES: usize = 8;

/// Peak-to-median power ratio below which a window holds no tone.
const PRESENCE_RATIO: f64 = 100.0;

/// Tone amplitude, relative to the signal scale, below which a window holds no tone.
const PRESENCE_FLOOR: f64 = 1e-9;

/// Spectral estimate for one analysis window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    /// Window centre [s].
    pub time: f64,
    /// Peak angular frequency [rad/s].
    pub frequency: f64,
    /// Peak-to-peak amplitude of the tone, in the signal's units.
    pub contrast: f64,
    /// Whether a tone stands out of the window spectrum.
    pub present: bool,
}

/// Hann-windowed spectra over consecutive windows of `window` seconds with
/// 50% overlap. The peak bin is refined by a three-point parabola in log
/// power; the amplitude is re-evaluated at the refined frequency.
pub fn instantaneous_frequency(times: &[f64], signal: &[f64], window: f64) -> Result<Vec<FrequencyEstimate>> {
    if times.len() != signal.len() {
        return Err(CarlError::invalid("signal", "times and values differ in length"));
    }
    if times.len() < 2 {
        return Err(CarlError::Resolution("need at least two samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(CarlError::invalid("times", "must increase"));
    }
    let n = (window / dt).round() as usize;
    if n < MIN_WINDOW_SAMPLES {
        return Err(CarlError::Resolution(format!(
            "window of {window:e} s holds {n} samples (need {MIN_WINDOW_SAMPLES})"
        )));
    }
    if n > signal.len() {
        return Err(CarlError::Resolution(format!(
            "window of {n} samples exceeds the {}-sample signal",
            signal.len()
        )));
    }

    let hann: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
    let w_sum: f64 = hann.iter().sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let hop = (n / 2).max(1);
    let bin = 2.0 * PI / (n as f64 * dt);

    let mut out = Vec::new();
    let mut start = 0;
    while start + n <= signal.len() {
        let seg = &signal[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        let rms = (seg.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for i in 0..n {
            buf[i] = Complex64::new((seg[i] - mean) * hann[i], 0.0);
        }
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm_sqr()).collect();

        // ties go to the lower bin because only a strictly larger value replaces the peak
        let mut peak = 1;
        for j in 2..n / 2 {
            if power[j] > power[peak] {
                peak = j;
            }
        }
        let offset = if peak >= 1 && peak + 1 < power.len() {
            log_parabola_offset(power[peak - 1], power[peak], power[peak + 1])
        } else {
            0.0
        };
        let frequency = (peak as f64 + offset) * bin;

        let t0 = times[start];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += (seg[i] - mean) * hann[i] * Complex64::from_polar(1.0, -frequency * i as f64 * dt);
        }
        let amplitude = 2.0 * acc.norm() / w_sum;

        let mut sorted = power[1..].to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let scale = mean.abs() + rms;
        // a maximum in the first bin is the tail of a trend rather than a tone
        let present = peak >= 2 && amplitude > PRESENCE_FLOOR * scale && power[peak] > PRESENCE_RATIO * median;

        out.push(FrequencyEstimate {
            time: t0 + 0.5 * (n - 1) as f64 * dt,
            frequency,
            contrast: 2.0 * amplitude,
            present,
        });
        start += hop;
    }
    Ok(out)
}

fn log_parabola_offset(a: f64, b: f64, c: f64) -> f64 {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return 0.0;
    }
    let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
    let denom = la - 2.0 * lb + lc;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (la - lc) / denom).clamp(-0.5, 0.5)
}
