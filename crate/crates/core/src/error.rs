use std::path::PathBuf;

use crate::detectors::DetectorKind;

/// Errors produced by the sensing toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("sample stream too short: need at least {required} samples, got {actual}")]
    StreamTooShort { required: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue} below tolerance")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("{detector} requires prior `{field}`")]
    MissingPrior {
        detector: DetectorKind,
        field: &'static str,
    },

    #[error("degenerate input for {detector}: {reason}")]
    Degenerate {
        detector: DetectorKind,
        reason: &'static str,
    },

    #[error("feature learning needs at least 2 segments, got {0}")]
    TooFewSegments(usize),

    #[error("feature file: {0}")]
    FeatureFormat(String),

    #[error("signal power must be declared to mix at a target SNR")]
    UnknownSignalPower,

    #[error("malformed sample file {path}: {reason}")]
    MalformedStream { path: PathBuf, reason: String },

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
