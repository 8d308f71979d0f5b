use num_complex::Complex64;

use crate::constants::HBAR;
use crate::dynamics::phasor_sum;
use crate::error::{CarlError, Result};

/// Outcoupled beat power `Tħωδ|α+ + α−|²` [W], with `δ` in Hz.
pub fn beat_power(plus: Complex64, minus: Complex64, transmission: f64, omega: f64, fsr: f64) -> f64 {
    transmission * HBAR * omega * fsr * (plus + minus).norm_sqr()
}

/// Peak-to-peak beat contrast `4Tħωδ|α+||α−|` [W] over one beat period.
pub fn contrast(plus: Complex64, minus: Complex64, transmission: f64, omega: f64, fsr: f64) -> f64 {
    4.0 * transmission * HBAR * omega * fsr * plus.norm() * minus.norm()
}

/// Probe power `ΔP²/(16 P_pump)` inferred from the beat contrast.
pub fn probe_power_from_contrast(contrast: f64, pump_power: f64) -> Result<f64> {
    if !(pump_power > 0.0) {
        return Err(CarlError::Domain(format!("pump power must be positive, got {pump_power}")));
    }
    Ok(contrast * contrast / (16.0 * pump_power))
}

/// Bunching `|N⁻¹ Σ e^{2ikx_n}|` of a set of positions.
pub fn bunching(positions: &[f64], k: f64) -> Result<f64> {
    if positions.is_empty() {
        return Err(CarlError::Domain("bunching of an empty ensemble".into()));
    }
    Ok(phasor_sum(positions, k).norm() / positions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const T: f64 = 2e-6;
    const W: f64 = 2.0 * PI * 3.78e14;
    const D: f64 = 3.5e9;

    fn unit() -> f64 {
        T * HBAR * W * D
    }

    #[test]
    fn single_mode_and_full_interference() {
        let p = Complex64::new(3.0, 0.0);
        assert!((beat_power(p, 0.0.into(), T, W, D) - 9.0 * unit()).abs() < 1e-12 * unit());
        let one = Complex64::new(1.0, 0.0);
        assert!((beat_power(one, one, T, W, D) - 4.0 * beat_power(one, 0.0.into(), T, W, D)).abs() < 1e-20);
    }

    #[test]
    fn contrast_is_max_minus_min() {
        let (p, m) = (Complex64::new(2.0, 0.0), Complex64::from_polar(0.3, 1.1));
        let (mut hi, mut lo) = (f64::MIN, f64::MAX);
        for i in 0..20000 {
            let th = 2.0 * PI * i as f64 / 20000.0;
            let b = beat_power(p, m * Complex64::from_polar(1.0, th), T, W, D);
            hi = hi.max(b);
            lo = lo.min(b);
        }
        let c = contrast(p, m, T, W, D);
        assert!(((hi - lo) - c).abs() < 1e-6 * c);
    }

    #[test]
    fn probe_from_contrast() {
        assert!((probe_power_from_contrast(4.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(probe_power_from_contrast(0.0, 1.0).unwrap(), 0.0);
        assert!(probe_power_from_contrast(1.0, 0.0).is_err());
        let (p, m) = (Complex64::new(100.0, 0.0), Complex64::new(0.0, 0.7));
        let pump = unit() * p.norm_sqr();
        let probe = probe_power_from_contrast(contrast(p, m, T, W, D), pump).unwrap();
        assert!((probe / (unit() * m.norm_sqr()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bunching_limits() {
        let k = 2.0 * PI / 780e-9;
        assert!((bunching(&[1e-4; 7], k).unwrap() - 1.0).abs() < 1e-12);
        let lambda = 2.0 * PI / k;
        let comb: Vec<f64> = (0..400).map(|n| n as f64 * lambda / 4.0).collect();
        assert!(bunching(&comb, k).unwrap() < 1e-12);
        assert!(bunching(&[], k).is_err());
    }
}
