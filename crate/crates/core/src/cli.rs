//! Command-line front end. Each subcommand parses its flags, converts
//! frequencies at the boundary and delegates to the library.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::analytic::{self, BunchedCarl};
use crate::constants::{angular, hertz};
use crate::dynamics::{Action, ModelParams, MolassesModel};
use crate::error::{CarlError, Result};
use crate::experiments::{
    fit_power_law, run_scenario, run_to_dir, save_threshold, threshold_scan, with_jobs,
    BunchingCriterion, DirSink, ArtifactSink, Scenario, ScanAxis, ThresholdSpec, PRESETS,
};
use crate::io::{open_file, read_columns_csv, read_series_csv, write_columns_csv, write_trace_csv};
use crate::observables::{
    bragg_doppler_shift, fit_rir, heterodyne_beat, instantaneous_frequency, quadrature_demod, rir_spectrum,
    BraggConfig, RirEnsemble, RirModel,
};
use crate::params::{PhysicalParams, TrapProperties};

/// Environment variable naming a default scenario file.
pub const CONFIG_ENV: &str = "CARL_SIM_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "carl", version, about = "Collective atomic recoil laser simulation and analysis")]
struct Cli {
    /// Output format; series default to csv, summaries to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Read and write frequencies in rad/s instead of Hz.
    #[arg(long, global = true)]
    angular: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derived cavity, coupling and trap parameters.
    Derive {
        #[arg(long, default_value = "rb85-paper")]
        preset: String,
        /// Laser detuning from D1 [Hz].
        #[arg(long, allow_negative_numbers = true)]
        detuning_d1: Option<f64>,
        /// Circulating power for the trap properties [W].
        #[arg(long, default_value_t = 10.0)]
        power: f64,
    },
    /// Print a shipped scenario as JSON.
    Preset { name: String },
    /// Run a scenario.
    Simulate {
        /// Scenario file or shipped preset name; falls back to $CARL_SIM_CONFIG.
        #[arg(long)]
        scenario: Option<String>,
        /// Run directory for the artifacts and manifest.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Beat frequency and contrast from a trace.
    Analyze {
        /// Trace CSV or run directory.
        #[arg(long)]
        trace: PathBuf,
        /// Analysis window [s].
        #[arg(long)]
        window: f64,
        /// Column to analyze.
        #[arg(long, default_value = "p_beat")]
        column: String,
        /// Fit a power law to the windows with a tone after this time [s].
        #[arg(long)]
        fit_from: Option<f64>,
        #[arg(long)]
        fit_to: Option<f64>,
        /// Time origin of the power law [s]; defaults to --fit-from.
        #[arg(long)]
        origin: Option<f64>,
    },
    /// Pump-power threshold along a detuning or atom-number grid.
    Threshold(ThresholdArgs),
    /// Raman-induced resonance spectra.
    Rir {
        #[command(subcommand)]
        command: RirCommand,
    },
    /// Bragg heterodyne synthesis and demodulation.
    Bragg {
        #[command(subcommand)]
        command: BraggCommand,
    },
    /// Tabulate a closed-form law on a grid.
    Analytic(AnalyticArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Axis {
    Detuning,
    Atoms,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long, value_enum)]
    axis: Axis,
    /// Grid values: detunings from D1 [Hz] or atom numbers.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    values: Vec<f64>,
    /// Base scenario supplying the run configuration and molasses.
    #[arg(long, default_value = "fig2")]
    scenario: String,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Intracavity pump power bracket [W].
    #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 2.0])]
    bracket: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Keep the friction but drop the momentum diffusion.
    #[arg(long)]
    no_diffusion: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum RirCommand {
    /// Synthesize a two-ensemble spectrum.
    Synth {
        #[command(flatten)]
        geometry: RirGeometry,
        /// Second-to-first atom number ratio.
        #[arg(long, default_value_t = 0.9)]
        ratio: f64,
        /// [K]
        #[arg(long, default_value_t = 300e-6)]
        t1: f64,
        #[arg(long, default_value_t = 200e-6)]
        t2: f64,
        /// Doppler shift of the second ensemble relative to the first [Hz].
        #[arg(long, default_value_t = 400e3, allow_negative_numbers = true)]
        dkv: f64,
        /// Scan range in kv [Hz].
        #[arg(long, default_value_t = -1.2e6, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, default_value_t = 1.6e6, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 601)]
        points: usize,
        /// Gaussian noise relative to the peak signal.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit two ensembles to a (v, W) series.
    Fit {
        #[command(flatten)]
        geometry: RirGeometry,
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RirGeometry {
    /// Raman wavelength [m].
    #[arg(long, default_value_t = 780e-9)]
    wavelength: f64,
    /// Beam crossing angle [rad].
    #[arg(long, default_value_t = std::f64::consts::PI)]
    theta: f64,
}

#[derive(Subcommand, Debug)]
enum BraggCommand {
    /// Doppler-shifted Bragg frequency, checked on a synthesized beat.
    Beat {
        /// Probe offset Δω_j [Hz].
        #[arg(long, allow_negative_numbers = true)]
        dwj: f64,
        /// Lattice Doppler term 2k_dip·v [Hz].
        #[arg(long, allow_negative_numbers = true)]
        kv: f64,
        /// Bragg reflectivity of the static profile.
        #[arg(long, default_value_t = 0.01)]
        r: f64,
        /// Record the synthesized signal as a (t, S) CSV.
        #[arg(long)]
        signal: Option<PathBuf>,
    },
    /// Quadrature demodulation of a (t, S) series.
    Demod {
        #[arg(long)]
        input: PathBuf,
        /// Reference frequency [Hz].
        #[arg(long)]
        reference: f64,
        /// Low-pass bandwidth [Hz].
        #[arg(long)]
        bandwidth: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Formula {
    /// kv(t) of a perfectly bunched cloud.
    CarlFrequency,
    /// |α−|(t) of a perfectly bunched cloud.
    ProbeAmplitude,
    /// |α−|³(kv)³ along t.
    Invariant,
    /// Displacement along t for the beat frequency given by --beat.
    Displacement,
    /// Beat frequency 2kv along kv.
    BeatFrequency,
    /// Radiation-pressure to CARL force ratio along the pump power [W].
    RadiationPressure,
    /// Probe-to-pump intensity ratio along N_sU_s/κ for fully bunched scatterers.
    MirrorBackscatter,
}

#[derive(Args, Debug)]
struct AnalyticArgs {
    #[arg(value_enum)]
    formula: Formula,
    #[arg(long, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Logarithmic spacing.
    #[arg(long)]
    log: bool,
    #[arg(long, default_value = "rb85-paper")]
    preset: String,
    #[arg(long, default_value_t = 1e6)]
    atoms: f64,
    /// Pump as the intracavity photon number; the preset's input power if absent.
    #[arg(long)]
    pump_photons: Option<f64>,
    /// Beat frequency for the displacement law [Hz].
    #[arg(long)]
    beat: Option<f64>,
}

/// Runs the CLI and returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => 0,
        Err(e) if e.is_broken_pipe() => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                3
            } else {
                1
            }
        }
    }
}

/// Frequency conversions at the boundary.
#[derive(Clone, Copy)]
struct Units {
    angular: bool,
}

impl Units {
    fn input(self, f: f64) -> f64 {
        if self.angular {
            f
        } else {
            angular(f)
        }
    }

    fn output(self, w: f64) -> f64 {
        if self.angular {
            w
        } else {
            hertz(w)
        }
    }

    fn suffix(self) -> &'static str {
        if self.angular {
            "rad/s"
        } else {
            "Hz"
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let units = Units { angular: cli.angular };
    match &cli.command {
        Command::Derive { preset, detuning_d1, power } => {
            derive(preset, detuning_d1.map(|d| units.input(d)), *power, units, cli.format, out)
        }
        Command::Preset { name } => {
            let s = Scenario::preset(name).ok_or_else(|| unknown_preset(name))?;
            emit_json(&s, out)
        }
        Command::Simulate { scenario, out: dir, seed } => simulate(scenario.as_deref(), dir.as_deref(), *seed, cli.format, out),
        Command::Analyze { trace, window, column, fit_from, fit_to, origin } => {
            analyze(trace, *window, column, (*fit_from, *fit_to, *origin), units, cli.format, out)
        }
        Command::Threshold(a) => threshold(a, units, cli.format, out),
        Command::Rir { command } => rir(command, units, cli.format, out),
        Command::Bragg { command } => bragg(command, units, cli.format, out),
        Command::Analytic(a) => analytic_table(a, units, cli.format, out),
    }
}

fn unknown_preset(name: &str) -> CarlError {
    CarlError::InvalidConfig(format!("unknown scenario `{name}` (not a file; presets: {})", PRESETS.join(", ")))
}

fn emit_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out).map_err(|e| CarlError::io("<stdout>", e))
}

fn emit_columns(header: &[&str], columns: &[&[f64]], format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Csv => write_columns_csv(header, columns, out),
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                header.iter().zip(columns).map(|(h, c)| (h.to_string(), serde_json::json!(c))).collect();
            emit_json(&map, out)
        }
    }
}

#[derive(Serialize)]
struct Row {
    name: &'static str,
    value: f64,
    unit: &'static str,
}

fn derive(preset: &str, detuning: Option<f64>, power: f64, units: Units, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    let mut p = PhysicalParams::preset(preset)
        .ok_or_else(|| CarlError::InvalidConfig(format!("unknown parameter preset `{preset}`")))?;
    if let Some(d) = detuning {
        p = p.with_detuning_d1(d);
    }
    let d = p.derive()?;
    let f = units.suffix();
    let mut rows = vec![
        Row { name: "free_spectral_range", value: d.free_spectral_range, unit: "Hz" },
        Row { name: "kappa", value: units.output(d.kappa), unit: f },
        Row { name: "mode_volume", value: d.mode_volume, unit: "m^3" },
        Row { name: "g0", value: units.output(d.g0), unit: f },
        Row { name: "u0", value: units.output(d.u0), unit: f },
        Row { name: "gamma0", value: d.gamma0, unit: "1/s" },
        Row { name: "recoil", value: units.output(d.recoil), unit: f },
        Row { name: "pump_rate", value: d.pump_rate, unit: "1/s" },
    ];
    match TrapProperties::at_power(&p, &d, power) {
        Ok(t) => rows.extend([
            Row { name: "intracavity_power", value: t.intracavity_power, unit: "W" },
            Row { name: "intracavity_photons", value: t.intracavity_photons, unit: "1" },
            Row { name: "trap_depth", value: t.depth, unit: "J" },
            Row { name: "trap_depth_temperature", value: t.depth_kelvin, unit: "K" },
            Row { name: "radial_frequency", value: units.output(t.radial_frequency), unit: f },
            Row { name: "axial_frequency", value: units.output(t.axial_frequency), unit: f },
            Row { name: "scattering_rate", value: t.scattering_rate, unit: "1/s" },
        ]),
        // blue detuning: report the coupling table without a trap
        Err(CarlError::NoConfinement { .. }) => {}
        Err(e) => return Err(e),
    }
    match format.unwrap_or(Format::Csv) {
        Format::Json => emit_json(&rows, out),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| CarlError::io("<stdout>", e))
        }
    }
}

fn load_scenario(arg: Option<&str>) -> Result<Scenario> {
    let name = match arg {
        Some(s) => s.to_string(),
        None => std::env::var(CONFIG_ENV)
            .map_err(|_| CarlError::InvalidConfig(format!("no --scenario given and ${CONFIG_ENV} is unset")))?,
    };
    let path = Path::new(&name);
    if path.is_file() {
        crate::io::read_json(path)
    } else {
        Scenario::preset(&name).ok_or_else(|| unknown_preset(&name))
    }
}

fn simulate(scenario: Option<&str>, dir: Option<&Path>, seed: Option<u64>, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    let mut s = load_scenario(scenario)?;
    if let Some(seed) = seed {
        s.config.seed = seed;
    }
    let output = match dir {
        Some(d) => run_to_dir(&s, d)?.0,
        None => run_scenario(&s)?,
    };
    match format {
        Some(Format::Csv) => write_trace_csv(&output.trace, out),
        _ => emit_json(&output.summary, out),
    }
}

#[derive(Serialize)]
struct Analysis {
    t: Vec<f64>,
    frequency: Vec<f64>,
    contrast: Vec<f64>,
    present: Vec<bool>,
    power_law: Option<crate::experiments::PowerLaw>,
}

fn analyze(
    trace: &Path,
    window: f64,
    column: &str,
    fit: (Option<f64>, Option<f64>, Option<f64>),
    units: Units,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<()> {
    let path = if trace.is_dir() { trace.join("trace.csv") } else { trace.to_path_buf() };
    let (header, cols) = read_columns_csv(open_file(&path)?)?;
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CarlError::InvalidConfig(format!("`{}` has no column `{name}`", path.display())))
    };
    let t = &cols[find("t")?];
    let s = &cols[find(column)?];
    let est = instantaneous_frequency(t, s, window)?;
    let a = Analysis {
        t: est.iter().map(|e| e.time).collect(),
        frequency: est.iter().map(|e| units.output(e.frequency)).collect(),
        contrast: est.iter().map(|e| e.contrast).collect(),
        present: est.iter().map(|e| e.present).collect(),
        power_law: None,
    };
    let power_law = if fit.0.is_some() || fit.1.is_some() {
        let (lo, hi) = (fit.0.unwrap_or(f64::NEG_INFINITY), fit.1.unwrap_or(f64::INFINITY));
        let keep: Vec<usize> = (0..a.t.len()).filter(|&i| a.present[i] && a.t[i] >= lo && a.t[i] <= hi).collect();
        let origin = fit.2.unwrap_or(lo.max(0.0));
        let x: Vec<f64> = keep.iter().map(|&i| a.t[i] - origin).collect();
        let y: Vec<f64> = keep.iter().map(|&i| a.frequency[i].abs()).collect();
        Some(fit_power_law(&x, &y)?)
    } else {
        None
    };
    match format.unwrap_or(Format::Csv) {
        Format::Json => emit_json(&Analysis { power_law, ..a }, out),
        Format::Csv => {
            if let Some(p) = power_law {
                eprintln!("power law: exponent {:.4}, log residual {:.2e}", p.exponent, p.log_residual);
            }
            let present: Vec<f64> = a.present.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect();
            write_columns_csv(
                &["t", "frequency", "contrast", "present"],
                &[&a.t, &a.frequency, &a.contrast, &present],
                out,
            )
        }
    }
}

fn threshold(a: &ThresholdArgs, units: Units, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    let base = load_scenario(Some(&a.scenario))?;
    base.validate()?;
    let physical = base.physical()?;
    let molasses = base
        .schedule
        .iter()
        .find_map(|e| match &e.action {
            Action::MolassesOn { molasses } => Some(*molasses),
            _ => None,
        })
        .ok_or_else(|| CarlError::InvalidConfig(format!("scenario `{}` never switches the molasses on", base.name)))?;
    let molasses = if a.no_diffusion { MolassesModel::frictional(molasses.friction) } else { molasses };
    let mut overrides = base.overrides.clone();
    overrides.pump = None;
    overrides.pump_photons = None;
    let spec = ThresholdSpec {
        physical,
        overrides,
        config: base.config.clone(),
        initial: base.initial.clone(),
        molasses,
        criterion: BunchingCriterion { level: base.analysis.level, tail_fraction: base.analysis.tail_fraction, ..Default::default() },
        seeds: a.seeds,
        bracket: match a.bracket[..] {
            [lo, hi] => [lo, hi],
            _ => return Err(CarlError::invalid("bracket", "expects two powers, lo,hi")),
        },
        tolerance: a.tolerance,
    };
    let axis = match a.axis {
        Axis::Detuning => ScanAxis::Detuning(a.values.iter().map(|&d| units.input(d)).collect()),
        Axis::Atoms => ScanAxis::Atoms(a.values.clone()),
    };
    let result = with_jobs(a.jobs, || threshold_scan(&spec, &axis))??;
    if let Some(dir) = &a.out {
        let mut sink = DirSink::create(dir)?;
        save_threshold(&mut sink, &spec, &result)?;
        sink.commit()?;
    }
    match format.unwrap_or(Format::Csv) {
        Format::Json => emit_json(&result, out),
        Format::Csv => {
            let x: Vec<f64> = result
                .points
                .iter()
                .map(|p| if a.axis == Axis::Detuning { units.output(p.axis_value) } else { p.axis_value })
                .collect();
            let y: Vec<f64> = result.points.iter().map(|p| p.threshold).collect();
            let lo: Vec<f64> = result.points.iter().map(|p| p.lo).collect();
            let hi: Vec<f64> = result.points.iter().map(|p| p.hi).collect();
            if let Some(r) = result.spearman {
                eprintln!("spearman {r:.3}");
            }
            write_columns_csv(&[result.axis.as_str(), "threshold", "lo", "hi"], &[&x, &y, &lo, &hi], out)
        }
    }
}

impl RirGeometry {
    fn model(&self) -> Result<RirModel> {
        if !(self.wavelength > 0.0) {
            return Err(CarlError::invalid("wavelength", "must be positive"));
        }
        RirModel::new(2.0 * std::f64::consts::PI / self.wavelength, self.theta, crate::constants::RB85_MASS)
    }
}

fn rir(command: &RirCommand, units: Units, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    match command {
        RirCommand::Synth { geometry, ratio, t1, t2, dkv, from, to, points, noise, seed } => {
            let m = geometry.model()?;
            if *points < 2 {
                return Err(CarlError::invalid("points", "need at least two"));
            }
            let k = m.wavenumber;
            let (lo, hi) = (units.input(*from) / k, units.input(*to) / k);
            let v: Vec<f64> = (0..*points).map(|i| lo + (hi - lo) * i as f64 / (*points - 1) as f64).collect();
            let ensembles = [
                RirEnsemble { atom_number: 1.0, temperature: *t1, velocity: 0.0 },
                RirEnsemble { atom_number: *ratio, temperature: *t2, velocity: units.input(*dkv) / k },
            ];
            let mut w = rir_spectrum(&m, &ensembles, &v)?;
            if *noise > 0.0 {
                let peak = w.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                let normal = Normal::new(0.0, noise * peak).map_err(|e| CarlError::invalid("noise", e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for x in w.iter_mut() {
                    *x += normal.sample(&mut rng);
                }
            }
            emit_columns(&["v", "w"], &[&v, &w], format.unwrap_or(Format::Csv), out)
        }
        RirCommand::Fit { geometry, input } => {
            let m = geometry.model()?;
            let (v, w) = read_series_csv(open_file(input)?)?;
            let fit = fit_rir(&m, &v, &w, None)?;
            let [a, b] = fit.ensembles;
            let rows = vec![
                Row { name: "n1", value: a.atom_number, unit: "1" },
                Row { name: "t1", value: a.temperature, unit: "K" },
                Row { name: "v1", value: a.velocity, unit: "m/s" },
                Row { name: "n2", value: b.atom_number, unit: "1" },
                Row { name: "t2", value: b.temperature, unit: "K" },
                Row { name: "v2", value: b.velocity, unit: "m/s" },
                Row { name: "ratio", value: b.atom_number / a.atom_number, unit: "1" },
                Row { name: "doppler_shift", value: units.output(fit.doppler_shift), unit: units.suffix() },
                Row { name: "rms_residual", value: fit.rms_residual, unit: "1" },
                Row { name: "degenerate", value: if fit.degenerate { 1.0 } else { 0.0 }, unit: "1" },
            ];
            match format.unwrap_or(Format::Json) {
                Format::Json => {
                    let mut v = serde_json::to_value(&fit)?;
                    v["doppler_shift"] = units.output(fit.doppler_shift).into();
                    v["unit"] = units.suffix().into();
                    emit_json(&v, out)
                }
                Format::Csv => {
                    let mut wtr = csv::Writer::from_writer(out);
                    for r in &rows {
                        wtr.serialize(r)?;
                    }
                    wtr.flush().map_err(|e| CarlError::io("<stdout>", e))
                }
            }
        }
    }
}

#[derive(Serialize)]
struct BeatReport {
    probe_offset: f64,
    doppler_term: f64,
    predicted: f64,
    measured: f64,
    resolution: f64,
    unit: &'static str,
}

fn bragg(command: &BraggCommand, units: Units, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    match command {
        BraggCommand::Beat { dwj, kv, r, signal } => {
            let dwj = units.input(*dwj);
            let doppler = units.input(*kv);
            // any lattice wavenumber works; only 2k_dip·v enters
            let k_dip = 1.0;
            let velocity = doppler / (2.0 * k_dip);
            let predicted = bragg_doppler_shift(dwj, k_dip, velocity);
            let config = BraggConfig { omega_j: dwj, omega_r: 0.0, k_dip, velocity, e_j0: 1.0, e_r0: 10.0 };
            // 400 beat periods at 64 samples per period
            let period = 2.0 * std::f64::consts::PI / predicted.abs().max(dwj.abs()).max(f64::MIN_POSITIVE);
            let dt = period / 64.0;
            let n = 64 * 400;
            let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
            let profile = vec![Complex64::new(*r, 0.0); n];
            let h = heterodyne_beat(&config, &times, &profile)?;
            if let Some(path) = signal {
                let f = crate::io::create_file(path)?;
                crate::io::write_series_csv(["t", "s"], &h.times, &h.signal, f)?;
            }
            let window = n as f64 * dt;
            let est = instantaneous_frequency(&h.times, &h.signal, window)?;
            let measured = est.first().map_or(f64::NAN, |e| e.frequency);
            let report = BeatReport {
                probe_offset: units.output(dwj),
                doppler_term: units.output(doppler),
                predicted: units.output(predicted),
                measured: units.output(measured),
                resolution: units.output(2.0 * std::f64::consts::PI / window),
                unit: units.suffix(),
            };
            match format.unwrap_or(Format::Json) {
                Format::Json => emit_json(&report, out),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    w.serialize(&report)?;
                    w.flush().map_err(|e| CarlError::io("<stdout>", e))
                }
            }
        }
        BraggCommand::Demod { input, reference, bandwidth } => {
            let (t, s) = read_series_csv(open_file(input)?)?;
            let d = quadrature_demod(&t, &s, units.input(*reference), units.input(*bandwidth))?;
            emit_columns(&["t", "amplitude", "phase"], &[&d.times, &d.amplitude, &d.phase], format.unwrap_or(Format::Csv), out)
        }
    }
}

fn grid(from: f64, to: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(CarlError::invalid("points", "need at least two"));
    }
    if log && !(from > 0.0 && to > 0.0) {
        return Err(CarlError::invalid("log", "a logarithmic grid needs positive ends"));
    }
    let s = |i: usize| i as f64 / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if log { from * (to / from).powf(s(i)) } else { from + (to - from) * s(i) })
        .collect())
}

fn analytic_table(a: &AnalyticArgs, units: Units, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    let p = PhysicalParams::preset(&a.preset)
        .ok_or_else(|| CarlError::InvalidConfig(format!("unknown parameter preset `{}`", a.preset)))?;
    let d = p.derive()?;
    let mut m = ModelParams::from_physical(&p, &d);
    if let Some(n) = a.pump_photons {
        if !(n >= 0.0) {
            return Err(CarlError::invalid("pump_photons", "must be non-negative"));
        }
        m.pump = m.kappa * n.sqrt();
    }
    let theory = BunchedCarl { atom_number: a.atoms, u0: m.u0, pump: m.pump, kappa: m.kappa, recoil: m.recoil() };
    let x = grid(a.from, a.to, a.points, a.log)?;
    let (names, xs, y): ([&str; 2], Vec<f64>, Vec<f64>) = match a.formula {
        Formula::CarlFrequency => {
            let y = x.iter().map(|&t| theory.carl_frequency(t).map(|v| units.output(v.value))).collect::<Result<_>>()?;
            (["t", "kv"], x, y)
        }
        Formula::ProbeAmplitude => {
            let y = x.iter().map(|&t| theory.probe_amplitude(t).map(|v| v.value)).collect::<Result<_>>()?;
            (["t", "probe_amplitude"], x, y)
        }
        Formula::Invariant => {
            let y = x
                .iter()
                .map(|&t| Ok((theory.probe_amplitude(t)?.value * theory.carl_frequency(t)?.value).powi(3)))
                .collect::<Result<_>>()?;
            (["t", "invariant"], x, y)
        }
        Formula::Displacement => {
            let beat = a.beat.ok_or_else(|| CarlError::invalid("beat", "the displacement law needs --beat"))?;
            let beat = units.input(beat);
            let y = x.iter().map(|&t| analytic::displacement(beat, t, m.wavenumber)).collect();
            (["t", "displacement"], x, y)
        }
        Formula::BeatFrequency => {
            let y = x.iter().map(|&kv| units.output(analytic::beat_frequency(units.input(kv)))).collect();
            (["kv", "beat_frequency"], x, y)
        }
        Formula::RadiationPressure => {
            let y = x
                .iter()
                .map(|&w| analytic::radiation_pressure_dominance(d.gamma0, m.u0, w))
                .collect::<Result<_>>()?;
            (["pump_power", "ratio"], x, y)
        }
        Formula::MirrorBackscatter => {
            let y = x
                .iter()
                .map(|&s| {
                    let minus = analytic::mirror_backscatter_steady(1.0, s * m.kappa, Complex64::new(1.0, 0.0), m.kappa, Complex64::new(1.0, 0.0))?;
                    Ok(minus.norm_sqr())
                })
                .collect::<Result<_>>()?;
            (["scatterer_strength", "intensity_ratio"], x, y)
        }
    };
    emit_columns(&names, &[&xs, &y], format.unwrap_or(Format::Csv), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (Result<()>, String) {
        let mut argv = vec!["carl"];
        argv.extend_from_slice(args);
        let cli = Cli::try_parse_from(argv).unwrap();
        let mut buf = Vec::new();
        let r = execute(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(main(["carl", "--bogus"]), 2);
        assert_eq!(main(["carl", "derive", "--preset"]), 2);
        assert_eq!(main(["carl", "--help"]), 0);
    }

    #[test]
    fn validation_errors_exit_with_three() {
        assert_eq!(main(["carl", "derive", "--preset", "nope"]), 3);
        assert_eq!(main(["carl", "analytic", "carl-frequency", "--from", "1", "--to", "2", "--points", "1"]), 3);
    }

    #[test]
    fn frequencies_convert_at_the_boundary() {
        let (r, hz) = run(&["derive"]);
        r.unwrap();
        let (r, rad) = run(&["--angular", "derive"]);
        r.unwrap();
        let value = |s: &str| -> f64 {
            s.lines().find(|l| l.starts_with("kappa,")).unwrap().split(',').nth(1).unwrap().parse().unwrap()
        };
        assert!((value(&rad) / value(&hz) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn mirror_backscatter_table() {
        let (r, s) = run(&["analytic", "mirror-backscatter", "--from", "0.06", "--to", "0.06", "--points", "2"]);
        r.unwrap();
        let v: f64 = s.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 0.0036).abs() < 1e-12);
    }
}
