use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must have at least 16 nodes and a positive extent (n_points={n_points}, [{start}, {end}])")]
    InvalidGrid { n_points: usize, start: f64, end: f64 },

    #[error("profile is not strictly increasing: U'({y}) = {slope:e}")]
    NonMonotoneProfile { y: f64, slope: f64 },

    #[error("inverting the profile failed at z = {z}: residual {residual:e}")]
    InversionFailure { z: f64, residual: f64 },

    #[error("profile value {name} is not finite at z = {z}")]
    NonFiniteProfile { name: &'static str, z: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("wavenumber must be nonzero")]
    ZeroWavenumber,

    #[error("elliptic system is singular: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("boundary system for the homogeneous solutions is ill-conditioned (|det| = {det:e})")]
    IllConditionedBoundarySystem { det: f64 },

    #[error("solver `{solver}` cannot handle this problem: {reason}")]
    UnsupportedSolver { solver: String, reason: String },

    #[error("non-finite value in the evolution at t = {t}")]
    NonFinite { t: f64 },

    #[error("invalid time stepping: {0}")]
    InvalidTimeStep(String),

    #[error("need at least 8 samples in the fit window, found {found}")]
    InsufficientSamples { found: usize },

    #[error("non-positive value {value:e} at t = {t} cannot be fitted on a log scale")]
    NonPositiveValue { t: f64, value: f64 },

    #[error("unknown {registry} `{name}` (known: {known})")]
    UnknownStrategy {
        registry: &'static str,
        name: String,
        known: String,
    },

    #[error("expression error at byte {pos}: {msg}")]
    Expression { pos: usize, msg: String },

    #[error("parse error{}: {msg}", key.as_ref().map(|k| format!(" at `{k}`")).unwrap_or_default())]
    Parse { key: Option<String>, msg: String },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
