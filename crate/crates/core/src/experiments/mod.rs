//! Scenarios, threshold scans, scaling sweeps and run persistence.

mod persist;
mod scaling;
mod scenario;
mod stats;
mod threshold;

pub use persist::{
    load_run, rerun_matches, run_to_dir, save_run, save_threshold, sha256_hex, trace_bytes, ArtifactSink, DirSink,
    LoadedRun, Manifest, ManifestEntry, MANIFEST, MANIFEST_VERSION,
};
pub use scaling::{scaling_sweep, ScalingPoint, ScalingResult};
pub use scenario::{
    desk_molasses, run_scenario, steady_bunching, AnalysisSpec, ModelOverrides, Scenario, ScenarioOutput,
    ScenarioSummary, PRESETS,
};
pub use stats::{fit_power_law, median, spearman, PowerLaw};
pub use threshold::{
    bisect, find_threshold, is_ordered, threshold_scan, with_jobs, BunchingCriterion, ScanAxis, ThresholdPoint,
    ThresholdResult, ThresholdSpec,
};
