use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CarlError>;

#[derive(Debug, Error)]
pub enum CarlError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular expression: {0}")]
    Singularity(&'static str),

    #[error("blue detuning gives a repulsive potential; no confinement (depth = {depth:e} J)")]
    NoConfinement { depth: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration diverged at step {step} (t = {time:e} s)")]
    Divergence { step: u64, time: f64 },

    #[error("phase lock undefined: pump mode amplitude is zero")]
    LockUndefined,

    #[error("insufficient spectral resolution: {0}")]
    Resolution(String),

    #[error("aliasing: {samples_per_period:.2} samples per reference period (need at least {required})")]
    Aliasing { samples_per_period: f64, required: f64 },

    #[error("fit did not converge after {iterations} iterations (residual {residual:e})")]
    FitFailure { iterations: usize, residual: f64 },

    #[error("bracket [{lo:e}, {hi:e}] does not contain the threshold: {detail}")]
    Bracket { lo: f64, hi: f64, detail: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<CarlError>,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CarlError {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        CarlError::InvalidParameter { name, reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CarlError::Io { path: path.into(), source }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        CarlError::Context { context: context.into(), source: Box::new(self) }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            CarlError::InvalidParameter { .. }
            | CarlError::InvalidConfig(_)
            | CarlError::Serde(_)
            | CarlError::Domain(_) => true,
            CarlError::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    /// The reader of our output went away, as with `carl ... | head`.
    pub fn is_broken_pipe(&self) -> bool {
        use std::io::ErrorKind::BrokenPipe;
        match self {
            CarlError::Io { source, .. } => source.kind() == BrokenPipe,
            CarlError::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == BrokenPipe),
            CarlError::Serde(e) => e.io_error_kind() == Some(BrokenPipe),
            CarlError::Context { source, .. } => source.is_broken_pipe(),
            _ => false,
        }
    }
}
