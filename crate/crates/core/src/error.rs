use std::path::PathBuf;

use thiserror::Error;

use crate::spectral::{Role, WavelengthGrid};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("value {value} at index {index} is outside the bounds for {role} spectra")]
    OutOfBounds {
        role: Role,
        index: usize,
        value: f64,
    },

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch {
        left: WavelengthGrid,
        right: WavelengthGrid,
    },

    #[error("role conflict: {0}")]
    RoleConflict(String),

    #[error("precision matrix is not symmetric (max relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("precision matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("posterior precision is not positive definite even after jitter")]
    NonPositivePosterior,

    #[error("design matrix is degenerate: {0}")]
    DegenerateDesign(String),

    #[error("estimate has no strictly positive element to normalize by")]
    DegenerateMean,

    #[error("confidence is only available for Bayesian estimates")]
    NoConfidenceAvailable,

    #[error("{0}")]
    MethodScope(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for extent {extent}")]
    IndexOutOfRange { index: usize, extent: usize },

    #[error("basis is degenerate: {0}")]
    DegenerateBasis(String),

    #[error("did not converge: gradient norm {gradient:.3e} after {iterations} iterations")]
    NonConverged { iterations: usize, gradient: f64 },

    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("wavelengths are not uniformly spaced near line {line}")]
    NonUniformGrid { line: usize },

    #[error("wavelengths are not strictly increasing at line {line}")]
    NonIncreasing { line: usize },

    #[error("target wavelength {wavelength} nm lies outside the source range [{min}, {max}] nm")]
    ExtrapolationRequired { wavelength: f64, min: f64, max: f64 },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("dataset {name}: {}", format_failures(.failures))]
    Dataset {
        name: String,
        failures: Vec<(PathBuf, Error)>,
    },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_failures(failures: &[(PathBuf, Error)]) -> String {
    failures
        .iter()
        .map(|(path, err)| format!("{}: {err}", path.display()))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
