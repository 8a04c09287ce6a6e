use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("warping function is non-positive at interior node {node} (w = {value})")]
    NonPositiveWarping { node: usize, value: f64 },

    #[error("pole regularity lost at node {node}: |w_s| = {slope}")]
    PoleRegularityViolated { node: usize, slope: f64 },

    #[error("invalid profile parameters: {0}")]
    InvalidProfileParameters(String),

    #[error("round sphere is extinct at t = {t} (extinction time {extinction})")]
    SphereExtinct { t: f64, extinction: f64 },

    #[error("non-finite value after step at t = {t}")]
    NumericalBlowup { t: f64 },

    #[error("need at least {needed} snapshots, history has {found}")]
    InsufficientSnapshots { needed: usize, found: usize },

    #[error("dimension {n} is below the minimum {min}")]
    DimensionTooSmall { n: usize, min: usize },

    #[error("input violates the contracted Bianchi identity (trace defect {defect:e})")]
    BianchiViolation { defect: f64 },

    #[error("history is empty")]
    EmptyHistory,

    #[error("no space-time point exceeds the threshold")]
    NoViolation,

    #[error("cutoff radius {radius} must be below the half-length {half_length}")]
    RadiusTooLarge { radius: f64, half_length: f64 },

    #[error("no positive-time snapshot lies within the horizon t <= {horizon}")]
    HorizonExceeded { horizon: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{key}: {message}")]
    Range { key: String, message: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("refusing to write output: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
