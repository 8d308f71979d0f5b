//! Run directories: staged writes, a hashed manifest, and replay checks.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CarlError, Result};
use crate::io::{read_trace_csv, write_columns_csv, write_snapshots_csv, write_trace_csv};
use crate::observables::FrequencyEstimate;

use super::scenario::{run_scenario, Scenario, ScenarioOutput};
use super::threshold::ThresholdResult;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub scenario_hash: String,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn entry(&self, name: &str) -> Option<&ManifestEntry> {
        self.files.iter().find(|e| e.name == name)
    }
}

/// Destination for named artifacts. Nothing is visible at the final location
/// until `commit` succeeds.
pub trait ArtifactSink {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()>;
    fn commit(self) -> Result<PathBuf>;
}

/// Writes into `<path>.partial` and renames it to `<path>` on commit. An
/// uncommitted staging directory is removed on drop.
#[derive(Debug)]
pub struct DirSink {
    target: PathBuf,
    staging: PathBuf,
    committed: bool,
}

impl DirSink {
    pub fn create(target: impl Into<PathBuf>) -> Result<Self> {
        let target = target.into();
        if target.exists() {
            return Err(CarlError::InvalidConfig(format!("output `{}` already exists", target.display())));
        }
        let mut staging = target.clone().into_os_string();
        staging.push(".partial");
        let staging = PathBuf::from(staging);
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| CarlError::io(&staging, e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| CarlError::io(&staging, e))?;
        Ok(DirSink { target, staging, committed: false })
    }

    pub fn staging(&self) -> &Path {
        &self.staging
    }
}

impl ArtifactSink for DirSink {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.staging.join(name);
        fs::write(&path, bytes).map_err(|e| CarlError::io(path, e))
    }

    fn commit(mut self) -> Result<PathBuf> {
        fs::rename(&self.staging, &self.target).map_err(|e| CarlError::io(&self.target, e))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for DirSink {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Trace CSV bytes; the replay check compares these.
pub fn trace_bytes(output: &ScenarioOutput) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace_csv(&output.trace, &mut buf)?;
    Ok(buf)
}

fn spectrum_bytes(spectrum: &[FrequencyEstimate]) -> Result<Vec<u8>> {
    let t: Vec<f64> = spectrum.iter().map(|e| e.time).collect();
    let f: Vec<f64> = spectrum.iter().map(|e| e.frequency).collect();
    let c: Vec<f64> = spectrum.iter().map(|e| e.contrast).collect();
    let p: Vec<f64> = spectrum.iter().map(|e| if e.present { 1.0 } else { 0.0 }).collect();
    let mut buf = Vec::new();
    write_columns_csv(&["t", "frequency", "contrast", "present"], &[&t, &f, &c, &p], &mut buf)?;
    Ok(buf)
}

struct Recorder<'a, S: ArtifactSink> {
    sink: &'a mut S,
    files: Vec<ManifestEntry>,
}

impl<S: ArtifactSink> Recorder<'_, S> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.sink.put(name, bytes)?;
        self.files.push(ManifestEntry { name: name.into(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }
}

/// Writes every artifact of a run, then the manifest.
pub fn save_run<S: ArtifactSink>(sink: &mut S, scenario: &Scenario, output: &ScenarioOutput) -> Result<Manifest> {
    let mut r = Recorder { sink, files: Vec::new() };
    r.put("scenario.json", &json_bytes(scenario)?)?;
    r.put("trace.csv", &trace_bytes(output)?)?;
    r.put("spectrum.csv", &spectrum_bytes(&output.spectrum)?)?;
    if !output.trace.snapshots.is_empty() {
        let mut buf = Vec::new();
        write_snapshots_csv(&output.trace.snapshots, &mut buf)?;
        r.put("snapshots.csv", &buf)?;
    }
    r.put("summary.json", &json_bytes(&output.summary)?)?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        scenario_hash: scenario.hash(),
        seed: scenario.config.seed,
        files: r.files,
    };
    r.sink.put(MANIFEST, &json_bytes(&manifest)?)?;
    Ok(manifest)
}

/// Writes a threshold scan as `threshold.json` and `threshold.csv`.
pub fn save_threshold<S: ArtifactSink, T: Serialize>(
    sink: &mut S,
    spec: &T,
    result: &ThresholdResult,
) -> Result<Manifest> {
    let spec_bytes = json_bytes(spec)?;
    let mut r = Recorder { sink, files: Vec::new() };
    r.put("threshold_spec.json", &spec_bytes)?;
    r.put("threshold.json", &json_bytes(result)?)?;
    let x: Vec<f64> = result.points.iter().map(|p| p.axis_value).collect();
    let y: Vec<f64> = result.points.iter().map(|p| p.threshold).collect();
    let lo: Vec<f64> = result.points.iter().map(|p| p.lo).collect();
    let hi: Vec<f64> = result.points.iter().map(|p| p.hi).collect();
    let mut buf = Vec::new();
    write_columns_csv(&[result.axis.as_str(), "threshold", "lo", "hi"], &[&x, &y, &lo, &hi], &mut buf)?;
    r.put("threshold.csv", &buf)?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        scenario_hash: sha256_hex(&spec_bytes),
        seed: 0,
        files: r.files,
    };
    r.sink.put(MANIFEST, &json_bytes(&manifest)?)?;
    Ok(manifest)
}

/// Runs and saves a scenario into a fresh directory.
pub fn run_to_dir(scenario: &Scenario, dir: &Path) -> Result<(ScenarioOutput, Manifest)> {
    let output = run_scenario(scenario)?;
    let mut sink = DirSink::create(dir)?;
    let manifest = save_run(&mut sink, scenario, &output)?;
    sink.commit()?;
    Ok((output, manifest))
}

#[derive(Clone, Debug)]
pub struct LoadedRun {
    pub manifest: Manifest,
    pub scenario: Scenario,
    pub trace: crate::dynamics::SimTrace,
}

/// Loads a run directory, checking every file against the manifest.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read(&p).map_err(|e| CarlError::io(p, e))
    };
    let manifest: Manifest = serde_json::from_slice(&read(MANIFEST)?)?;
    if manifest.version != MANIFEST_VERSION {
        return Err(CarlError::InvalidConfig(format!("unsupported manifest version {}", manifest.version)));
    }
    for e in &manifest.files {
        let bytes = read(&e.name)?;
        if sha256_hex(&bytes) != e.sha256 {
            return Err(CarlError::InvalidConfig(format!("`{}` does not match its manifest hash", e.name)));
        }
    }
    let scenario: Scenario = serde_json::from_slice(&read("scenario.json")?)?;
    if scenario.hash() != manifest.scenario_hash {
        return Err(CarlError::InvalidConfig("scenario does not match the manifest hash".into()));
    }
    let trace = read_trace_csv(read("trace.csv")?.as_slice())?;
    Ok(LoadedRun { manifest, scenario, trace })
}

/// Re-runs the stored scenario and reports whether the trace is bit-identical.
pub fn rerun_matches(dir: &Path) -> Result<bool> {
    let loaded = load_run(dir)?;
    let output = run_scenario(&loaded.scenario)?;
    let hash = sha256_hex(&trace_bytes(&output)?);
    Ok(loaded.manifest.entry("trace.csv").is_some_and(|e| e.sha256 == hash))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short_scenario() -> Scenario {
        let mut s = Scenario::preset("fig2").unwrap();
        s.config.duration = 20.0 * s.config.dt;
        s.config.snapshot_stride = Some(10);
        s.analysis.window = None;
        s
    }

    /// Fails on the `n`-th `put`.
    struct Faulty {
        inner: DirSink,
        remaining: usize,
    }

    impl ArtifactSink for Faulty {
        fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
            if self.remaining == 0 {
                return Err(CarlError::io(name, std::io::Error::other("injected")));
            }
            self.remaining -= 1;
            self.inner.put(name, bytes)
        }
        fn commit(self) -> Result<PathBuf> {
            self.inner.commit()
        }
    }

    #[test]
    fn round_trip_and_replay() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        let s = short_scenario();
        let (_, manifest) = run_to_dir(&s, &dir).unwrap();
        assert!(!tmp.path().join("run.partial").exists());
        assert!(manifest.entry("snapshots.csv").is_some());
        let loaded = load_run(&dir).unwrap();
        assert_eq!(loaded.scenario, s);
        assert_eq!(loaded.manifest, manifest);
        assert!(rerun_matches(&dir).unwrap());
        // refuses to overwrite
        assert!(DirSink::create(&dir).is_err());
    }

    #[test]
    fn tampering_is_detected() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        run_to_dir(&short_scenario(), &dir).unwrap();
        let p = dir.join("summary.json");
        let mut text = fs::read_to_string(&p).unwrap();
        text.push(' ');
        fs::write(&p, text).unwrap();
        assert!(load_run(&dir).is_err());
    }

    #[test]
    fn failed_write_leaves_nothing_behind() {
        let tmp = tempfile::tempdir().unwrap();
        let s = short_scenario();
        let out = run_scenario(&s).unwrap();
        for fail_at in 0..6 {
            let dir = tmp.path().join(format!("run{fail_at}"));
            let mut sink = Faulty { inner: DirSink::create(&dir).unwrap(), remaining: fail_at };
            assert!(save_run(&mut sink, &s, &out).is_err());
            drop(sink);
            assert!(!dir.exists());
            assert!(!tmp.path().join(format!("run{fail_at}.partial")).exists());
        }
    }
}
