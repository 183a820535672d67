//! Blind feature learning and lag-invariant feature matching.
//!
//! A feature is the leading eigenvector of a segment's sample covariance. For a
//! non-white stationary signal it stays put from segment to segment; for white noise it
//! wanders. [`fla_learn`] exploits that: it accepts the feature of the first pair of
//! consecutive segments whose similarity exceeds a threshold.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{
    eigendecompose, leading_eigenpair, sample_covariance, CovarianceEstimate, Feature,
    SensingSegment,
};

/// Default similarity threshold for [`fla_learn`].
pub const DEFAULT_THRESHOLD_TE: f64 = 0.8;

const FEATURE_FILE_VERSION: u32 = 1;
/// Power-iteration settings used by [`extract_feature`].
pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 10_000;

/// Maximum absolute circular cross-correlation between two features.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityScore(pub f64);

impl SimilarityScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A feature accepted by [`fla_learn`], with enough context to reuse it later.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedFeature {
    pub feature: Feature,
    pub similarity_at_learning: f64,
    /// Similarity threshold in force when the feature was accepted.
    pub threshold_te: f64,
    /// `(N, Ns)` of the segments the feature was learned from.
    pub segment_params: (usize, usize),
    pub provenance: String,
    /// RFC 3339 timestamp.
    pub created_at: String,
}

impl LearnedFeature {
    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }
}

/// `max_l |sum_k a[k] * b[(k + l) mod N]|` over all `N` circular lags.
///
/// The arguments are put in a canonical order before summing so the score is exactly
/// symmetric, not merely symmetric up to round-off.
pub fn feature_similarity(a: &Feature, b: &Feature) -> Result<SimilarityScore> {
    if a.order_n() != b.order_n() {
        return Err(Error::DimensionMismatch {
            expected: a.order_n(),
            actual: b.order_n(),
        });
    }
    let (x, y) = if canonical_le(a.values(), b.values()) {
        (a.values(), b.values())
    } else {
        (b.values(), a.values())
    };
    Ok(SimilarityScore(max_circular_correlation(x, y)))
}

fn max_circular_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    (0..n)
        .map(|lag| {
            a.iter()
                .enumerate()
                .map(|(k, &ak)| ak * b[(k + lag) % n])
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

fn canonical_le(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

/// Leading eigenvector of a covariance: power iteration first, full Jacobi when the
/// spectral gap is too small for power iteration to converge.
pub fn extract_feature(cov: &CovarianceEstimate) -> Result<Feature> {
    match leading_eigenpair(cov, POWER_TOLERANCE, POWER_MAX_ITERS) {
        Ok((_, feature)) => Ok(feature),
        Err(Error::NoConvergence { .. }) => Ok(eigendecompose(cov)?.leading_feature()),
        Err(e) => Err(e),
    }
}

/// Similarity of each consecutive pair of segment features, `rho_{i,i+1}`.
pub fn consecutive_similarities(segments: &[SensingSegment]) -> Result<Vec<f64>> {
    let features = segment_features(segments)?;
    features
        .windows(2)
        .map(|w| feature_similarity(&w[0], &w[1]).map(SimilarityScore::value))
        .collect()
}

/// Features of every segment, computed independently.
pub fn segment_features(segments: &[SensingSegment]) -> Result<Vec<Feature>> {
    crate::par::map_indices(segments.len(), |i| {
        extract_feature(&sample_covariance(&segments[i]))
    })
    .into_iter()
    .collect()
}

/// Scans consecutive segment pairs in order and returns the later feature of the first
/// pair whose similarity exceeds `threshold_te`. `Ok(None)` means nothing was learned.
pub fn fla_learn(segments: &[SensingSegment], threshold_te: f64) -> Result<Option<LearnedFeature>> {
    if segments.len() < 2 {
        return Err(Error::TooFewSegments(segments.len()));
    }
    if !(threshold_te > 0.0 && threshold_te < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "similarity threshold must lie in (0, 1), got {threshold_te}"
        )));
    }
    let (n, ns) = (segments[0].order_n(), segments[0].count_ns());
    if let Some(bad) = segments
        .iter()
        .find(|s| s.order_n() != n || s.count_ns() != ns)
    {
        return Err(Error::InvalidArgument(format!(
            "segments must share (N, Ns) = ({n}, {ns}); found ({}, {})",
            bad.order_n(),
            bad.count_ns()
        )));
    }

    let mut previous = extract_feature(&sample_covariance(&segments[0]))?;
    for segment in &segments[1..] {
        let current = extract_feature(&sample_covariance(segment))?;
        let score = feature_similarity(&previous, &current)?.value();
        if score > threshold_te {
            return Ok(Some(LearnedFeature {
                feature: current,
                similarity_at_learning: score,
                threshold_te,
                segment_params: (n, ns),
                provenance: "fla".to_string(),
                created_at: now_rfc3339(),
            }));
        }
        previous = current;
    }
    Ok(None)
}

pub(crate) fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureFile {
    version: u32,
    n: usize,
    ns: usize,
    threshold: f64,
    similarity: f64,
    provenance: String,
    created_at: String,
    values: Vec<f64>,
}

/// Renders the TOML feature document. Floats carry 17 significant digits.
pub fn render_feature(f: &LearnedFeature) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "version = {FEATURE_FILE_VERSION}");
    let _ = writeln!(out, "n = {}", f.feature.order_n());
    let _ = writeln!(out, "ns = {}", f.segment_params.1);
    let _ = writeln!(out, "threshold = {:.16e}", f.threshold_te);
    let _ = writeln!(out, "similarity = {:.16e}", f.similarity_at_learning);
    let _ = writeln!(out, "provenance = {}", toml::Value::String(f.provenance.clone()));
    let _ = writeln!(out, "created_at = {}", toml::Value::String(f.created_at.clone()));
    out.push_str("values = [\n");
    for v in f.feature.values() {
        let _ = writeln!(out, "  {v:.16e},");
    }
    out.push_str("]\n");
    out
}

/// Parses and validates a feature document.
pub fn parse_feature(text: &str) -> Result<LearnedFeature> {
    let file: FeatureFile =
        toml::from_str(text).map_err(|e| Error::FeatureFormat(e.message().to_string()))?;
    if file.version != FEATURE_FILE_VERSION {
        return Err(Error::FeatureFormat(format!(
            "unsupported version {}",
            file.version
        )));
    }
    if file.values.len() != file.n {
        return Err(Error::FeatureFormat(format!(
            "n = {} but {} values present",
            file.n,
            file.values.len()
        )));
    }
    if !(0.0..=1.0 + 1e-9).contains(&file.similarity) {
        return Err(Error::FeatureFormat(format!(
            "similarity {} outside [0, 1]",
            file.similarity
        )));
    }
    if file.similarity < file.threshold {
        return Err(Error::FeatureFormat(format!(
            "similarity {} below learning threshold {}",
            file.similarity, file.threshold
        )));
    }
    let feature = Feature::new(file.values)
        .map_err(|e| Error::FeatureFormat(format!("invariant violation: {e}")))?;
    Ok(LearnedFeature {
        feature,
        similarity_at_learning: file.similarity,
        threshold_te: file.threshold,
        segment_params: (file.n, file.ns),
        provenance: file.provenance,
        created_at: file.created_at,
    })
}

pub fn save_feature(f: &LearnedFeature, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_feature(f))?;
    Ok(())
}

pub fn load_feature(path: impl AsRef<Path>) -> Result<LearnedFeature> {
    parse_feature(&std::fs::read_to_string(path)?)
}

/// Loads a feature and checks it against the vector length in use.
pub fn load_feature_for(path: impl AsRef<Path>, order_n: usize) -> Result<LearnedFeature> {
    let f = load_feature(path)?;
    if f.feature.order_n() != order_n {
        return Err(Error::DimensionMismatch {
            expected: order_n,
            actual: f.feature.order_n(),
        });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_ar1_stream, gen_noise_segment, Ar1Params};
    use crate::linalg::build_sensing_vectors;
    use proptest::prelude::*;

    fn feature(v: &[f64]) -> Feature {
        Feature::new(v.to_vec()).unwrap()
    }

    /// Brute force straight from the definition, no canonical ordering.
    fn oracle_similarity(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let mut best = 0.0f64;
        for lag in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[k] * b[(k + lag) % n];
            }
            best = best.max(s.abs());
        }
        best
    }

    #[test]
    fn similarity_examples() {
        let phi = feature(&[0.6, 0.0, 0.8]);
        assert!((feature_similarity(&phi, &phi).unwrap().value() - 1.0).abs() < 1e-15);

        let e1 = Feature::basis(2, 0);
        let e2 = Feature::basis(2, 1);
        assert_eq!(feature_similarity(&e1, &e2).unwrap().value(), 1.0);

        let a = feature(&[1.0, 0.0, 0.0, 0.0]);
        let b = feature(&[0.0, 0.6, 0.8, 0.0]);
        let expected = oracle_similarity(a.values(), b.values());
        assert!((expected - 0.8).abs() < 1e-15);
        assert_eq!(feature_similarity(&a, &b).unwrap().value(), expected);
    }

    #[test]
    fn similarity_rejects_mismatched_lengths() {
        let err = feature_similarity(&Feature::basis(2, 0), &Feature::basis(3, 0)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    fn unit_vector() -> impl Strategy<Value = Vec<f64>> {
        (2usize..16).prop_flat_map(|n| {
            proptest::collection::vec(-1.0..1.0f64, n)
                .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
                .prop_map(|v| {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| x / norm).collect()
                })
        })
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
        unit_vector().prop_flat_map(|a| {
            let n = a.len();
            (
                Just(a),
                proptest::collection::vec(-1.0..1.0f64, n).prop_map(|v| {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    v.iter().map(|x| x / norm).collect()
                }),
                0..n,
            )
        })
    }

    proptest! {
        #[test]
        fn similarity_properties((a, b, shift) in pair()) {
            prop_assume!(Feature::new(b.clone()).is_ok());
            let fa = Feature::new(a.clone()).unwrap();
            let fb = Feature::new(b.clone()).unwrap();
            let ab = feature_similarity(&fa, &fb).unwrap().value();
            prop_assert_eq!(ab, feature_similarity(&fb, &fa).unwrap().value());
            prop_assert!((0.0..=1.0 + 1e-9).contains(&ab));
            prop_assert!((ab - oracle_similarity(fa.values(), fb.values())).abs() < 1e-12);

            let n = b.len();
            let shifted: Vec<f64> = (0..n).map(|k| b[(k + shift) % n]).collect();
            let fs = Feature::new(shifted).unwrap();
            prop_assert!((feature_similarity(&fa, &fs).unwrap().value() - ab).abs() < 1e-12);

            let negated: Vec<f64> = a.iter().map(|x| -x).collect();
            let fneg = Feature::new(negated).unwrap();
            prop_assert!((feature_similarity(&fneg, &fb).unwrap().value() - ab).abs() < 1e-12);
        }
    }

    fn ar1_segment(seed: u64, n: usize, ns: usize) -> SensingSegment {
        let params = Ar1Params::new(0.9, 1.0).unwrap();
        let stream = gen_ar1_stream(&params, ns + n - 1, seed);
        build_sensing_vectors(&stream, n, ns).unwrap()
    }

    #[test]
    fn learns_from_identical_segments() {
        let seg = ar1_segment(11, 8, 2000);
        let learned = fla_learn(&[seg.clone(), seg], 0.8).unwrap().unwrap();
        assert!((learned.similarity_at_learning - 1.0).abs() < 1e-12);
        assert_eq!(learned.segment_params, (8, 2000));
    }

    #[test]
    fn learns_ar1_feature() {
        let segments = [ar1_segment(1, 32, 10_000), ar1_segment(2, 32, 10_000)];
        let learned = fla_learn(&segments, 0.8).unwrap().expect("AR(1) feature should be learned");
        assert!(learned.similarity_at_learning > 0.99, "{}", learned.similarity_at_learning);
    }

    #[test]
    fn white_noise_is_not_learned() {
        let segments = [
            gen_noise_segment(32, 10_000, 1.0, 1).unwrap(),
            gen_noise_segment(32, 10_000, 1.0, 2).unwrap(),
        ];
        assert!(fla_learn(&segments, 0.999).unwrap().is_none());
    }

    #[test]
    fn fla_argument_errors() {
        let seg = ar1_segment(3, 4, 100);
        assert!(matches!(
            fla_learn(std::slice::from_ref(&seg), 0.8),
            Err(Error::TooFewSegments(1))
        ));
        assert!(fla_learn(&[seg.clone(), seg.clone()], 1.0).is_err());
        assert!(fla_learn(&[seg, ar1_segment(3, 4, 50)], 0.8).is_err());
    }

    fn sample_learned() -> LearnedFeature {
        let values: Vec<f64> = (1..=5).map(|k| (k as f64).sqrt() * 0.1).collect();
        LearnedFeature {
            feature: Feature::from_direction(&values).unwrap(),
            similarity_at_learning: 0.912_345_678_901_234_5,
            threshold_te: 0.8,
            segment_params: (5, 1000),
            provenance: "unit \"test\"".into(),
            created_at: "2026-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.toml");
        let f = sample_learned();
        save_feature(&f, &path).unwrap();
        let back = load_feature(&path).unwrap();
        assert_eq!(back, f);
        for (a, b) in back.feature.values().iter().zip(f.feature.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(load_feature_for(&path, 6).is_err());
    }

    #[test]
    fn truncated_file_names_missing_field() {
        let text = render_feature(&sample_learned());
        let cut = &text[..text.find("values").unwrap()];
        let err = parse_feature(cut).unwrap_err().to_string();
        assert!(err.contains("values"), "{err}");
    }

    #[test]
    fn non_unit_vector_is_rejected() {
        let text = render_feature(&sample_learned());
        let first = text.lines().find(|l| l.starts_with("  ")).unwrap();
        let bad = text.replacen(first, "  5.0e-1,", 1);
        let err = parse_feature(&bad).unwrap_err().to_string();
        assert!(err.contains("invariant violation"), "{err}");
    }
}
