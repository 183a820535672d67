//! Detection statistics.
//!
//! Each statistic is a pure function of an [`Observation`] (a sample covariance with a
//! lazily cached spectrum) and whatever [`PriorKnowledge`] the detector needs:
//!
//! | detector | statistic | priors |
//! |----------|-----------|--------|
//! | EC    | `(Ns/N) sum_i lambda_si/(lambda_si+sigma2) phi_si^T R phi_si` | `R_s`, `sigma2` |
//! | CASE1 | `lambda/(lambda+sigma2) phi^T R phi` | `lambda_s1`, `sigma2`, `phi_s1` |
//! | CASE2 | `phi^T R phi` | `phi_s1` (threshold depends on `sigma2`) |
//! | CASE3 | GLRT with `sigma2` and `lambda_s1` estimated | `phi_s1` |
//! | CASE4 | `lambda_r1` | `sigma2` (threshold only) |
//! | CASE5 | GLRT with every parameter estimated | none |
//! | MME   | `lambda_r1 / lambda_rN` | none |
//! | CAV   | `sum_ij |r_ij| / sum_i |r_ii|` | none |
//! | FTM   | similarity of `phi_s1` and the leading eigenvector of `R` | `phi_s1` |
//! | AGM   | arithmetic over geometric mean of the eigenvalues | none |
//!
//! Degenerate spectra are errors; a [`Statistic`] is always finite.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::feature_similarity;
use crate::linalg::{
    eigendecompose, sample_covariance, CovarianceEstimate, Feature, SensingSegment,
    SpectralDecomposition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Ec,
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Mme,
    Cav,
    Ftm,
    Agm,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 10] = [
        Self::Ec,
        Self::Case1,
        Self::Case2,
        Self::Case3,
        Self::Case4,
        Self::Case5,
        Self::Mme,
        Self::Cav,
        Self::Ftm,
        Self::Agm,
    ];

    /// Lowercase identifier used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Self::Ec => "ec",
            Self::Case1 => "case1",
            Self::Case2 => "case2",
            Self::Case3 => "case3",
            Self::Case4 => "case4",
            Self::Case5 => "case5",
            Self::Mme => "mme",
            Self::Cav => "cav",
            Self::Ftm => "ftm",
            Self::Agm => "agm",
        }
    }

    /// Prior fields the detector cannot run without.
    pub fn required_priors(self) -> &'static [&'static str] {
        match self {
            Self::Ec => &["r_s", "sigma2"],
            Self::Case1 => &["lambda_s1", "sigma2", "phi_s1"],
            Self::Case2 | Self::Case3 | Self::Ftm => &["phi_s1"],
            Self::Case4 => &["sigma2"],
            Self::Case5 | Self::Mme | Self::Cav | Self::Agm => &[],
        }
    }

    /// Whether the test depends on the true noise variance (and so suffers from noise
    /// uncertainty). CASE2 and CASE4 take it through the threshold.
    pub fn depends_on_noise_variance(self) -> bool {
        matches!(self, Self::Ec | Self::Case1 | Self::Case2 | Self::Case4)
    }

    /// Statistic unchanged by uniform scaling of the covariance.
    pub fn is_scale_invariant(self) -> bool {
        !self.depends_on_noise_variance()
    }

    pub fn evaluate(self, obs: &Observation, prior: &PriorKnowledge) -> Result<Statistic> {
        match self {
            Self::Ec => stat_ec(obs, prior),
            Self::Case1 => stat_case1(obs, prior),
            Self::Case2 => stat_case2(obs, prior),
            Self::Case3 => stat_case3(obs, prior),
            Self::Case4 => stat_case4(obs, prior),
            Self::Case5 => stat_case5(obs),
            Self::Mme => stat_mme(obs),
            Self::Cav => stat_cav(obs),
            Self::Ftm => stat_ftm(obs, prior),
            Self::Agm => stat_agm(obs),
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_ascii_uppercase())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|d| d.name() == lower)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown detector `{s}`")))
    }
}

/// Full signal covariance with its decomposition, as consumed by EC.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalCovariance {
    cov: CovarianceEstimate,
    spectrum: SpectralDecomposition,
}

impl SignalCovariance {
    pub fn new(cov: CovarianceEstimate) -> Result<Self> {
        let spectrum = eigendecompose(&cov)?;
        Ok(Self { cov, spectrum })
    }

    pub fn covariance(&self) -> &CovarianceEstimate {
        &self.cov
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }
}

/// Parameters a detector may treat as known.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriorKnowledge {
    pub lambda_s1: Option<f64>,
    pub sigma2: Option<f64>,
    pub phi_s1: Option<Feature>,
    pub r_s: Option<SignalCovariance>,
}

impl PriorKnowledge {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_lambda_s1(mut self, lambda_s1: f64) -> Self {
        self.lambda_s1 = Some(lambda_s1);
        self
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = Some(sigma2);
        self
    }

    pub fn with_phi_s1(mut self, phi: Feature) -> Self {
        self.phi_s1 = Some(phi);
        self
    }

    pub fn with_signal_covariance(mut self, r_s: CovarianceEstimate) -> Result<Self> {
        self.r_s = Some(SignalCovariance::new(r_s)?);
        Ok(self)
    }

    /// Fails with the first prior `detector` needs but does not have.
    pub fn check(&self, detector: DetectorKind) -> Result<()> {
        for &field in detector.required_priors() {
            let present = match field {
                "lambda_s1" => self.lambda_s1.is_some(),
                "sigma2" => self.sigma2.is_some(),
                "phi_s1" => self.phi_s1.is_some(),
                "r_s" => self.r_s.is_some(),
                _ => unreachable!("unknown prior field {field}"),
            };
            if !present {
                return Err(Error::MissingPrior { detector, field });
            }
        }
        Ok(())
    }

    fn sigma2(&self, detector: DetectorKind) -> Result<f64> {
        let s = self.sigma2.ok_or(Error::MissingPrior {
            detector,
            field: "sigma2",
        })?;
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {s}"
            )));
        }
        Ok(s)
    }

    fn lambda_s1(&self, detector: DetectorKind) -> Result<f64> {
        let l = self.lambda_s1.ok_or(Error::MissingPrior {
            detector,
            field: "lambda_s1",
        })?;
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "signal power must be nonnegative, got {l}"
            )));
        }
        Ok(l)
    }

    fn phi_s1(&self, detector: DetectorKind, order_n: usize) -> Result<&Feature> {
        let phi = self.phi_s1.as_ref().ok_or(Error::MissingPrior {
            detector,
            field: "phi_s1",
        })?;
        if phi.order_n() != order_n {
            return Err(Error::DimensionMismatch {
                expected: order_n,
                actual: phi.order_n(),
            });
        }
        Ok(phi)
    }
}

/// A sample covariance plus its spectrum, computed at most once and shared by every
/// detector evaluated on the same data.
#[derive(Debug)]
pub struct Observation {
    cov: CovarianceEstimate,
    count_ns: usize,
    spectrum: OnceLock<SpectralDecomposition>,
}

impl Observation {
    pub fn new(cov: CovarianceEstimate, count_ns: usize) -> Self {
        Self {
            cov,
            count_ns,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_segment(segment: &SensingSegment) -> Self {
        Self::new(sample_covariance(segment), segment.count_ns())
    }

    pub fn covariance(&self) -> &CovarianceEstimate {
        &self.cov
    }

    pub fn order_n(&self) -> usize {
        self.cov.order_n()
    }

    pub fn count_ns(&self) -> usize {
        self.count_ns
    }

    pub fn spectrum(&self) -> Result<&SpectralDecomposition> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let d = eigendecompose(&self.cov)?;
        Ok(self.spectrum.get_or_init(|| d))
    }
}

/// A finite test statistic tagged with its detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Statistic {
    pub detector: DetectorKind,
    pub value: f64,
}

impl Statistic {
    fn new(detector: DetectorKind, value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self { detector, value })
        } else {
            Err(Error::Degenerate {
                detector,
                reason: "statistic is not finite",
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    H0,
    H1,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::H0 => "H0",
            Self::H1 => "H1",
        })
    }
}

/// `H1` iff the statistic strictly exceeds the threshold.
pub fn decide(stat: Statistic, threshold: f64) -> Decision {
    if stat.value > threshold {
        Decision::H1
    } else {
        Decision::H0
    }
}

/// Estimator-correlator with the full signal covariance known.
pub fn stat_ec(obs: &Observation, prior: &PriorKnowledge) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Ec;
    let r_s = prior.r_s.as_ref().ok_or(Error::MissingPrior {
        detector: D,
        field: "r_s",
    })?;
    let sigma2 = prior.sigma2(D)?;
    let n = obs.order_n();
    if r_s.cov.order_n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: r_s.cov.order_n(),
        });
    }
    let spectrum = &r_s.spectrum;
    let mut sum = 0.0;
    for (i, &lambda) in spectrum.eigenvalues().iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let weight = lambda / (lambda + sigma2);
        sum += weight * obs.cov.quadratic_form(spectrum.eigenvector(i));
    }
    Statistic::new(D, obs.count_ns as f64 / n as f64 * sum)
}

/// Rank-1 estimator-correlator with every parameter known.
pub fn stat_case1(obs: &Observation, prior: &PriorKnowledge) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Case1;
    let lambda = prior.lambda_s1(D)?;
    let sigma2 = prior.sigma2(D)?;
    let phi = prior.phi_s1(D, obs.order_n())?;
    let weight = lambda / (lambda + sigma2);
    Statistic::new(D, weight * obs.cov.quadratic_form(phi.values()))
}

/// Energy projected on the known feature, `phi^T R phi`.
pub fn stat_case2(obs: &Observation, prior: &PriorKnowledge) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Case2;
    let phi = prior.phi_s1(D, obs.order_n())?;
    Statistic::new(D, obs.cov.quadratic_form(phi.values()))
}

/// GLRT with the feature known and signal/noise powers estimated.
///
/// `sigma0^2 = tr(R)/N`, `sigma1^2 = (tr(R) - phi^T R phi)/(N-1)`, and
/// `T = ln(sigma0^2 / phi^T R phi) + (N-1) ln(sigma0^2 / sigma1^2)`.
pub fn stat_case3(obs: &Observation, prior: &PriorKnowledge) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Case3;
    let n = obs.order_n();
    let phi = prior.phi_s1(D, n)?;
    let projected = obs.cov.quadratic_form(phi.values());
    let total = obs.cov.trace();
    if !(projected > 0.0) {
        return Err(Error::Degenerate {
            detector: D,
            reason: "no energy along the feature",
        });
    }
    let sigma0 = total / n as f64;
    let sigma1 = (total - projected) / (n - 1) as f64;
    if !(sigma1 > 0.0) {
        return Err(Error::Degenerate {
            detector: D,
            reason: "feature captures all of the energy",
        });
    }
    // Logs of ratios rather than differences of logs: a common scale cancels exactly.
    Statistic::new(D, (sigma0 / projected).ln() + (n - 1) as f64 * (sigma0 / sigma1).ln())
}

/// Largest sample eigenvalue; its threshold carries the noise variance.
pub fn stat_case4(obs: &Observation, prior: &PriorKnowledge) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Case4;
    prior.sigma2(D)?;
    Statistic::new(D, obs.spectrum()?.leading_eigenvalue())
}

/// Blind GLRT under the rank-1 model.
///
/// `sigma0^2 = sum lambda_i / N`, `sigma1^2 = sum_{i>=2} lambda_i / (N-1)`, and
/// `T = ln(sigma0^2 / lambda_1) + (N-1) ln(sigma0^2 / sigma1^2)`.
pub fn stat_case5(obs: &Observation) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Case5;
    let ev = obs.spectrum()?.eigenvalues();
    let n = ev.len();
    let lambda1 = ev[0];
    let tail: f64 = ev[1..].iter().sum();
    if !(lambda1 > 0.0) {
        return Err(Error::Degenerate {
            detector: D,
            reason: "zero covariance",
        });
    }
    if !(tail > 0.0) {
        return Err(Error::Degenerate {
            detector: D,
            reason: "covariance has rank one",
        });
    }
    let sigma0 = (lambda1 + tail) / n as f64;
    let sigma1 = tail / (n - 1) as f64;
    Statistic::new(D, (sigma0 / lambda1).ln() + (n - 1) as f64 * (sigma0 / sigma1).ln())
}

/// Maximum over minimum eigenvalue.
pub fn stat_mme(obs: &Observation) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Mme;
    let ev = obs.spectrum()?.eigenvalues();
    let smallest = ev[ev.len() - 1];
    if !(smallest > 0.0) {
        return Err(Error::Degenerate {
            detector: D,
            reason: "smallest eigenvalue is zero",
        });
    }
    Statistic::new(D, ev[0] / smallest)
}

/// Covariance absolute value: total absolute mass over diagonal mass.
pub fn stat_cav(obs: &Observation) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Cav;
    let n = obs.order_n();
    let total: f64 = obs.cov.entries().iter().map(|x| x.abs()).sum();
    let diagonal: f64 = (0..n).map(|i| obs.cov.get(i, i).abs()).sum();
    if !(diagonal > 0.0) {
        return Err(Error::Degenerate {
            detector: D,
            reason: "zero diagonal",
        });
    }
    Statistic::new(D, total / diagonal)
}

/// Feature template matching: lag-invariant similarity between the stored feature and
/// the observation's leading eigenvector.
///
/// The leading eigenvector comes from the cached Jacobi spectrum, so for an isotropic
/// covariance it is `e_1`.
pub fn stat_ftm(obs: &Observation, prior: &PriorKnowledge) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Ftm;
    let phi = prior.phi_s1(D, obs.order_n())?;
    let leading = obs.spectrum()?.leading_feature();
    Statistic::new(D, feature_similarity(phi, &leading)?.value())
}

/// Arithmetic over geometric mean of the eigenvalues.
pub fn stat_agm(obs: &Observation) -> Result<Statistic> {
    const D: DetectorKind = DetectorKind::Agm;
    let ev = obs.spectrum()?.eigenvalues();
    if ev.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Degenerate {
            detector: D,
            reason: "nonpositive eigenvalue",
        });
    }
    let n = ev.len() as f64;
    let mean = ev.iter().sum::<f64>() / n;
    let mean_log_ratio = ev.iter().map(|l| (l / mean).ln()).sum::<f64>() / n;
    Statistic::new(D, (-mean_log_ratio).exp())
}

/// Evaluates several detectors on one observation, keeping per-detector errors apart.
pub fn evaluate_all(
    detectors: &[(DetectorKind, &PriorKnowledge)],
    obs: &Observation,
) -> Vec<Result<f64>> {
    detectors
        .iter()
        .map(|(kind, prior)| kind.evaluate(obs, prior).map(|s| s.value))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigendecompose;
    use crate::signal::{gen_noise_segment, gen_rank1_segment, mix_at_snr, Rank1Model, SnrSpec};
    use proptest::prelude::*;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;
    const TOL: f64 = 1e-9;

    fn obs(n: usize, entries: &[f64]) -> Observation {
        Observation::new(CovarianceEstimate::new(n, entries.to_vec()).unwrap(), 1)
    }

    fn diag(values: &[f64]) -> Observation {
        Observation::new(CovarianceEstimate::diagonal(values), 1)
    }

    fn two_by_two() -> Observation {
        obs(2, &[2.0, 1.0, 1.0, 2.0])
    }

    fn phi_diag() -> Feature {
        Feature::new(vec![SQRT_HALF, SQRT_HALF]).unwrap()
    }

    fn with_phi(phi: Feature) -> PriorKnowledge {
        PriorKnowledge::none().with_phi_s1(phi)
    }

    #[test]
    fn ec_examples() {
        let zero = PriorKnowledge::none()
            .with_sigma2(1.0)
            .with_signal_covariance(CovarianceEstimate::diagonal(&[0.0, 0.0]))
            .unwrap();
        assert_eq!(stat_ec(&two_by_two(), &zero).unwrap().value, 0.0);

        // R_s spectrum {3, 1}: (2/2) * (3/4 * 1 + 1/2 * 1) = 1.25.
        let prior = PriorKnowledge::none()
            .with_sigma2(1.0)
            .with_signal_covariance(CovarianceEstimate::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap())
            .unwrap();
        let identity = Observation::new(CovarianceEstimate::identity(2), 2);
        assert!((stat_ec(&identity, &prior).unwrap().value - 1.25).abs() < TOL);

        let scaled = Observation::new(CovarianceEstimate::identity(2).scaled(3.5), 2);
        assert!((stat_ec(&scaled, &prior).unwrap().value - 3.5 * 1.25).abs() < TOL);

        let missing = PriorKnowledge::none().with_sigma2(1.0);
        assert!(matches!(
            stat_ec(&identity, &missing),
            Err(Error::MissingPrior { field: "r_s", .. })
        ));
        let wrong_size = PriorKnowledge::none()
            .with_sigma2(1.0)
            .with_signal_covariance(CovarianceEstimate::identity(3))
            .unwrap();
        assert!(matches!(
            stat_ec(&identity, &wrong_size),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn case1_examples() {
        let prior = |lambda: f64, phi: Feature| {
            PriorKnowledge::none()
                .with_lambda_s1(lambda)
                .with_sigma2(1.0)
                .with_phi_s1(phi)
        };
        let r = diag(&[3.0, 1.0]);
        assert!((stat_case1(&r, &prior(1.0, Feature::basis(2, 0))).unwrap().value - 1.5).abs() < TOL);
        assert_eq!(stat_case1(&r, &prior(0.0, Feature::basis(2, 0))).unwrap().value, 0.0);
        assert!((stat_case1(&two_by_two(), &prior(1.0, phi_diag())).unwrap().value - 1.5).abs() < TOL);
        assert!(matches!(
            stat_case1(&r, &with_phi(Feature::basis(2, 0))),
            Err(Error::MissingPrior { field: "lambda_s1", .. })
        ));
    }

    #[test]
    fn case2_examples() {
        assert_eq!(
            stat_case2(&diag(&[3.0, 1.0]), &with_phi(Feature::basis(2, 0))).unwrap().value,
            3.0
        );
        let phi = Feature::new(vec![0.6, 0.0, 0.8]).unwrap();
        let v = stat_case2(&Observation::new(CovarianceEstimate::identity(3), 1), &with_phi(phi));
        assert!((v.unwrap().value - 1.0).abs() < TOL);
        assert!((stat_case2(&two_by_two(), &with_phi(phi_diag())).unwrap().value - 3.0).abs() < TOL);
        assert!(matches!(
            stat_case2(&two_by_two(), &PriorKnowledge::none()),
            Err(Error::MissingPrior { field: "phi_s1", .. })
        ));
    }

    #[test]
    fn case3_examples() {
        let expected = (4.0f64 / 3.0).ln();
        let t = stat_case3(&two_by_two(), &with_phi(phi_diag())).unwrap().value;
        assert!((t - expected).abs() < TOL);
        assert!((t - 0.28768).abs() < 1e-5);

        let phi = Feature::new(vec![0.6, 0.0, 0.8]).unwrap();
        let t = stat_case3(&Observation::new(CovarianceEstimate::identity(3), 1), &with_phi(phi));
        assert!(t.unwrap().value.abs() < TOL);

        let scaled = obs(2, &[20.0, 10.0, 10.0, 20.0]);
        assert!((stat_case3(&scaled, &with_phi(phi_diag())).unwrap().value - expected).abs() < TOL);
    }

    #[test]
    fn case3_degenerate_inputs() {
        // All energy on the feature.
        let r = Observation::new(CovarianceEstimate::rank_one(2.0, phi_diag().values()), 1);
        assert!(matches!(
            stat_case3(&r, &with_phi(phi_diag())),
            Err(Error::Degenerate { .. })
        ));
        // No energy on the feature.
        let r = diag(&[0.0, 1.0]);
        assert!(matches!(
            stat_case3(&r, &with_phi(Feature::basis(2, 0))),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn case4_examples() {
        let p = PriorKnowledge::none().with_sigma2(1.0);
        assert_eq!(stat_case4(&diag(&[4.0, 1.0]), &p).unwrap().value, 4.0);
        assert!((stat_case4(&two_by_two(), &p).unwrap().value - 3.0).abs() < TOL);
        assert_eq!(stat_case4(&diag(&[1.0, 1.0]), &p).unwrap().value, 1.0);
        assert!(stat_case4(&diag(&[1.0, 1.0]), &PriorKnowledge::none()).is_err());
    }

    #[test]
    fn case5_examples() {
        let t = stat_case5(&diag(&[3.0, 1.0])).unwrap().value;
        assert!((t - (4.0f64 / 3.0).ln()).abs() < TOL);
        assert!(stat_case5(&diag(&[1.0; 4])).unwrap().value.abs() < TOL);
        let t = stat_case5(&diag(&[5.0, 1.0, 1.0, 1.0])).unwrap().value;
        assert!((t - ((2.0f64 / 5.0).ln() + 3.0 * 2f64.ln())).abs() < TOL);
        assert!((t - 1.16315).abs() < 1e-5);
        assert!(matches!(stat_case5(&diag(&[1.0, 0.0])), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn blind_ratio_examples() {
        assert_eq!(stat_mme(&diag(&[1.0, 1.0])).unwrap().value, 1.0);
        assert_eq!(stat_mme(&diag(&[4.0, 1.0])).unwrap().value, 4.0);
        assert!((stat_mme(&two_by_two()).unwrap().value - 3.0).abs() < TOL);
        assert!(stat_mme(&diag(&[1.0, 0.0])).is_err());

        assert_eq!(stat_cav(&diag(&[7.0, 2.0, 0.5])).unwrap().value, 1.0);
        assert_eq!(stat_cav(&two_by_two()).unwrap().value, 1.5);
        assert_eq!(stat_cav(&obs(2, &[1.0; 4])).unwrap().value, 2.0);
        assert!(stat_cav(&diag(&[0.0, 0.0])).is_err());

        assert!((stat_agm(&diag(&[1.0, 1.0])).unwrap().value - 1.0).abs() < TOL);
        assert!((stat_agm(&diag(&[4.0, 1.0])).unwrap().value - 1.25).abs() < TOL);
        assert!((stat_agm(&two_by_two()).unwrap().value - 2.0 / 3f64.sqrt()).abs() < TOL);
        assert!(stat_agm(&diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn ftm_examples() {
        let phi = Feature::new(vec![0.6, 0.0, 0.8, 0.0]).unwrap();
        let r = Observation::new(CovarianceEstimate::rank_one(1.0, phi.values()), 1);
        assert!((stat_ftm(&r, &with_phi(phi.clone())).unwrap().value - 1.0).abs() < TOL);

        // Isotropic: leading eigenvector is e_1 by the Jacobi ordering.
        let r = Observation::new(CovarianceEstimate::identity(4), 1);
        let v = stat_ftm(&r, &with_phi(phi)).unwrap().value;
        assert!((v - 0.8).abs() < TOL);

        let eps = 1e-3;
        let r = diag(&[eps, 1.0 + eps, eps, eps]);
        let v = stat_ftm(&r, &with_phi(Feature::basis(4, 0))).unwrap().value;
        assert!((v - 1.0).abs() < TOL);
    }

    #[test]
    fn decisions_use_strict_inequality() {
        let s = |v| Statistic {
            detector: DetectorKind::Mme,
            value: v,
        };
        assert_eq!(decide(s(1.5), 1.0), Decision::H1);
        assert_eq!(decide(s(1.0), 1.0), Decision::H0);
        assert_eq!(decide(s(-0.3), 0.0), Decision::H0);
        assert_eq!(decide(s(1e300), f64::INFINITY), Decision::H0);
        assert_eq!(decide(s(-1e300), f64::NEG_INFINITY), Decision::H1);
    }

    #[test]
    fn names_round_trip() {
        for d in DetectorKind::ALL {
            assert_eq!(d.name().parse::<DetectorKind>().unwrap(), d);
            assert_eq!(d.to_string().parse::<DetectorKind>().unwrap(), d);
        }
        assert!("glrt".parse::<DetectorKind>().is_err());
    }

    #[test]
    fn prior_check_names_missing_field() {
        let err = PriorKnowledge::none().check(DetectorKind::Case1).unwrap_err();
        assert_eq!(err.to_string(), "CASE1 requires prior `lambda_s1`");
        assert!(PriorKnowledge::none().check(DetectorKind::Mme).is_ok());
    }

    fn random_covariance() -> impl Strategy<Value = CovarianceEstimate> {
        (2usize..=8, any::<u64>()).prop_map(|(n, seed)| {
            let seg = gen_noise_segment(n, 3 * n, 1.0, seed).unwrap();
            sample_covariance(&seg)
        })
    }

    fn unit(n: usize) -> impl Strategy<Value = Feature> {
        proptest::collection::vec(-1.0..1.0f64, n)
            .prop_filter_map("nonzero", |v| Feature::from_direction(&v).ok())
    }

    proptest! {
        #[test]
        fn blind_statistics_respect_lower_bounds(r in random_covariance()) {
            let o = Observation::new(r, 1);
            prop_assert!(stat_mme(&o).unwrap().value >= 1.0);
            prop_assert!(stat_cav(&o).unwrap().value >= 1.0);
            prop_assert!(stat_agm(&o).unwrap().value >= 1.0 - 1e-12);
        }

        #[test]
        fn case1_is_scaled_case2(
            (r, phi) in random_covariance().prop_flat_map(|r| {
                let n = r.order_n();
                (Just(r), unit(n))
            }),
            lambda in 0.0..10.0f64,
            sigma2 in 0.01..10.0f64,
        ) {
            let o = Observation::new(r, 1);
            let prior = PriorKnowledge::none()
                .with_lambda_s1(lambda)
                .with_sigma2(sigma2)
                .with_phi_s1(phi);
            let c = lambda / (lambda + sigma2);
            let t1 = stat_case1(&o, &prior).unwrap().value;
            let t2 = stat_case2(&o, &prior).unwrap().value;
            prop_assert!((t1 - c * t2).abs() <= 1e-12 * t2.abs().max(1.0));
        }

        #[test]
        fn case2_is_rotation_covariant(
            (r, phi, basis) in (2usize..=8).prop_flat_map(|n| {
                (
                    any::<u64>().prop_map(move |s| sample_covariance(&gen_noise_segment(n, 3 * n, 1.0, s).unwrap())),
                    unit(n),
                    any::<u64>(),
                )
            })
        ) {
            let n = r.order_n();
            // Orthogonal Q from the eigenvectors of an unrelated covariance.
            let q_source = sample_covariance(&gen_noise_segment(n, 4 * n, 1.0, basis).unwrap());
            let d = eigendecompose(&q_source).unwrap();
            let mut q = vec![0.0; n * n];
            for k in 0..n {
                for i in 0..n {
                    q[i * n + k] = d.eigenvector(k)[i];
                }
            }
            let rotated = r.congruence(&q).unwrap();
            let q_phi: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|k| q[i * n + k] * phi.values()[k]).sum())
                .collect();
            let before = stat_case2(&Observation::new(r, 1), &with_phi(phi)).unwrap().value;
            let after = stat_case2(
                &Observation::new(rotated, 1),
                &with_phi(Feature::from_direction(&q_phi).unwrap()),
            )
            .unwrap()
            .value;
            prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
        }
    }

    #[test]
    fn case2_is_unbiased_on_rank1_signal() {
        let n = 8;
        let ns = 50;
        let lambda = 2.0;
        let sigma2 = 1.0;
        let phi = Feature::from_direction(&[1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        let model = Rank1Model::new(lambda, phi.clone()).unwrap();
        let snr = SnrSpec::new(10.0 * (lambda / (n as f64 * sigma2)).log10(), sigma2).unwrap();
        let prior = with_phi(phi);
        let trials = 10_000;
        let values: Vec<f64> = (0..trials as u64)
            .map(|t| {
                let s = gen_rank1_segment(&model, ns, 2 * t).unwrap();
                let x = mix_at_snr(s, Some(lambda / n as f64), &snr, 2 * t + 1).unwrap();
                stat_case2(&Observation::from_segment(&x), &prior).unwrap().value
            })
            .collect();
        let mean = values.iter().sum::<f64>() / trials as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - (lambda + sigma2)).abs() < 3.0 * se, "{mean} +- {se}");
    }
}
