//! Measured signals derived from simulated states and traces.

mod beat;
mod bragg;
mod fit;
mod rir;
mod spectral;

pub use beat::{beat_power, bunching, contrast, probe_power_from_contrast};
pub use bragg::{
    bragg_doppler_shift, heterodyne_beat, lattice_velocity, quadrature_demod, retardation_corrected, BraggConfig,
    DemodResult, HeterodyneResult, DEMOD_MIN_SAMPLES_PER_PERIOD,
};
pub use fit::{levenberg_marquardt, LmOptions, LmReport};
pub use rir::{fit_rir, fit_rir_grid, rir_spectrum, RirEnsemble, RirFit, RirGuess, RirModel};
pub use spectral::{instantaneous_frequency, FrequencyEstimate, MIN_WINDOW_SAMPLES};
