//! Covariance-based spectrum sensing.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: sensing vectors, sample covariance, Jacobi eigendecomposition and
//!   power-iteration leading eigenpairs.
//! * [`feature`]: blind learning of the leading-eigenvector feature and lag-invariant
//!   similarity scoring, plus the on-disk feature format.
//! * [`detectors`]: the GLRT family (EC, Case 1-5) and the blind MME/CAV/AGM and
//!   feature-template statistics.
//! * [`signal`]: seeded noise, rank-1 and AR(1) generators, SNR mixing and raw sample
//!   loaders.
//! * [`harness`]: empirical threshold calibration and Pd-vs-SNR sweeps.
//!
//! Monte-Carlo loops go through [`par`], which uses rayon when the `parallel` feature
//! is enabled (the default). Output is bit-identical with or without it.

pub mod detectors;
pub mod error;
pub mod feature;
pub mod harness;
pub mod linalg;
pub mod par;
pub mod signal;

pub use detectors::{DetectorKind, Observation, PriorKnowledge, Statistic};
pub use error::{Error, Result};
pub use feature::{LearnedFeature, SimilarityScore};
pub use linalg::{CovarianceEstimate, Feature, SensingSegment, SpectralDecomposition};
