//! Simulation and analysis toolkit for collective atomic recoil lasing in a
//! high-finesse ring cavity.
//!
//! * [`params`]: cavity, species and laser inputs and derived rates.
//! * [`dynamics`]: atom–field equations of motion and their integrators.
//! * [`analytic`]: closed-form perfect-bunching and steady-state results.
//! * [`observables`]: beat notes, bunching, spectra, RIR fits, Bragg heterodyne.
//! * [`experiments`]: scenarios, threshold scans, scaling sweeps, persistence.
//! * [`cli`]: the `carl` command-line front end.

// NaN must fail the range checks, hence the negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod observables;
pub mod params;

pub use error::{CarlError, Result};
