//! Empirical threshold calibration and Pd-vs-SNR sweeps.
//!
//! Thresholds are order statistics of the detector's own statistic under noise only:
//! with `M` noise-only trials and target false-alarm rate `pf`, the threshold is the
//! `k`-th smallest value with `k = ceil((1 - pf) * M)`, and decisions use a strict
//! `>`. No asymptotic distribution is assumed, so every detector is calibrated the
//! same way.
//!
//! Trial `t` of a batch draws its data from `mix64(batch_seed, t)`, so a batch is the
//! same however trials are scheduled. All detectors in a sweep see the same segments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::detectors::{DetectorKind, Observation, PriorKnowledge};
use crate::error::{Error, Result};
use crate::linalg::{eigendecompose, SensingSegment};
use crate::par::map_indices;
use crate::signal::{gen_noise_segment, mix64, mix_at_snr, SignalModel, SnrSpec};

/// CSV header written by [`export_rows`].
pub const CSV_HEADER: &str = "snr_db,detector,pd,trials,seed";

const CALIBRATION_STREAM: u64 = 0xCA11_B8A7;
const VALIDATION_STREAM: u64 = 0x0DD_BA7C4;
const DETECTION_STREAM: u64 = 0xDE7E_C710;

/// Noise-only (H0) data model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pub order_n: usize,
    pub count_ns: usize,
    pub sigma2: f64,
    /// Ratio of assumed to true noise variance used when calibrating detectors that
    /// depend on it. 1 means the noise level is known exactly.
    pub uncertainty: f64,
}

impl NoiseModel {
    pub fn new(order_n: usize, count_ns: usize, sigma2: f64) -> Result<Self> {
        if order_n < 2 || count_ns == 0 {
            return Err(Error::InvalidArgument(format!(
                "need N >= 2 and Ns >= 1, got N={order_n}, Ns={count_ns}"
            )));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        Ok(Self {
            order_n,
            count_ns,
            sigma2,
            uncertainty: 1.0,
        })
    }

    pub fn with_uncertainty(mut self, uncertainty: f64) -> Result<Self> {
        if !(uncertainty > 0.0) || !uncertainty.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise uncertainty factor must be positive, got {uncertainty}"
            )));
        }
        self.uncertainty = uncertainty;
        Ok(self)
    }

    /// Noise variance a detector is calibrated against.
    pub fn assumed_sigma2(&self, detector: DetectorKind) -> f64 {
        if detector.depends_on_noise_variance() {
            self.sigma2 * self.uncertainty
        } else {
            self.sigma2
        }
    }
}

/// A detector together with the priors it is allowed to use.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    pub prior: PriorKnowledge,
}

impl DetectorSpec {
    /// Fails if `prior` lacks a field the detector needs.
    pub fn new(kind: DetectorKind, prior: PriorKnowledge) -> Result<Self> {
        prior.check(kind)?;
        Ok(Self { kind, prior })
    }

    /// A detector that needs no priors.
    pub fn blind(kind: DetectorKind) -> Result<Self> {
        Self::new(kind, PriorKnowledge::none())
    }
}

/// Priors matching a signal model: feature and `R_s` from its population covariance
/// rescaled to `reference_snr_db`, `lambda_s1` its leading eigenvalue, and the assumed
/// noise variance `sigma2 * uncertainty`.
pub fn model_priors(
    signal: &SignalModel,
    noise: &NoiseModel,
    reference_snr_db: f64,
) -> Result<PriorKnowledge> {
    if signal.order_n() != noise.order_n {
        return Err(Error::DimensionMismatch {
            expected: noise.order_n,
            actual: signal.order_n(),
        });
    }
    let assumed = noise.sigma2 * noise.uncertainty;
    let power = noise.sigma2 * 10f64.powf(reference_snr_db / 10.0);
    let scaled = signal.with_power_per_entry(power)?;
    let r_s = scaled.population_covariance();
    let spectrum = eigendecompose(&r_s)?;
    let phi = match signal {
        SignalModel::Rank1Vector(m) => m.phi().clone(),
        _ => spectrum.leading_feature(),
    };
    PriorKnowledge::none()
        .with_lambda_s1(spectrum.leading_eigenvalue())
        .with_sigma2(assumed)
        .with_phi_s1(phi)
        .with_signal_covariance(r_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub detector: DetectorKind,
    pub threshold: f64,
    pub target_pf: f64,
    pub trials: usize,
    /// False-alarm rate at `threshold` on a fresh noise-only batch of `trials` segments.
    pub empirical_pf: f64,
    pub master_seed: u64,
}

/// Smallest calibration batch for which the order-statistic threshold is meaningful.
pub fn recommended_trials(target_pf: f64) -> usize {
    (10.0 / target_pf).ceil() as usize
}

/// One standard deviation of a binomial proportion.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn check_pf(target_pf: f64) -> Result<()> {
    if !(target_pf > 0.0 && target_pf < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target false-alarm probability must lie in (0, 1), got {target_pf}"
        )));
    }
    Ok(())
}

/// The `ceil((1 - pf) * M)`-th smallest sample.
pub fn threshold_from_samples(samples: &[f64], target_pf: f64) -> Result<f64> {
    check_pf(target_pf)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no calibration samples".into()));
    }
    let m = samples.len();
    // ceil((1 - pf) M) = M - floor(pf M); the nudge absorbs representation error in pf M.
    let allowed = ((target_pf * m as f64) * (1.0 + 1e-12)).floor() as usize;
    let k = m - allowed.min(m - 1);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[k - 1])
}

/// Fraction of samples strictly above `threshold`.
pub fn exceedance_rate(samples: &[f64], threshold: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&x| x > threshold).count() as f64 / samples.len() as f64
}

/// Statistics of every detector on `trials` noise-only segments drawn from `stream`.
/// Each detector gets the first error it hit, in trial order.
fn noise_statistics(
    detectors: &[&DetectorSpec],
    noise: &NoiseModel,
    sigma2: f64,
    trials: usize,
    stream: u64,
) -> Vec<Result<Vec<f64>>> {
    let per_trial = map_indices(trials, |t| {
        let seed = mix64(stream, t as u64);
        let segment = gen_noise_segment(noise.order_n, noise.count_ns, sigma2, seed)?;
        Ok(evaluate_segment(detectors, &segment))
    });
    transpose(detectors.len(), trials, per_trial)
}

fn evaluate_segment(detectors: &[&DetectorSpec], segment: &SensingSegment) -> Vec<Result<f64>> {
    let obs = Observation::from_segment(segment);
    detectors
        .iter()
        .map(|d| d.kind.evaluate(&obs, &d.prior).map(|s| s.value))
        .collect()
}

fn transpose(
    count: usize,
    trials: usize,
    per_trial: Vec<Result<Vec<Result<f64>>>>,
) -> Vec<Result<Vec<f64>>> {
    let mut out: Vec<Result<Vec<f64>>> = (0..count).map(|_| Ok(Vec::with_capacity(trials))).collect();
    for trial in per_trial {
        match trial {
            Ok(values) => {
                for (slot, v) in out.iter_mut().zip(values) {
                    if let Ok(column) = slot {
                        match v {
                            Ok(x) => column.push(x),
                            Err(e) => *slot = Err(e),
                        }
                    }
                }
            }
            Err(e) => {
                let msg = e.to_string();
                for slot in out.iter_mut().filter(|s| s.is_ok()) {
                    *slot = Err(Error::InvalidArgument(msg.clone()));
                }
            }
        }
    }
    out
}

/// Calibrates several detectors on shared noise-only batches.
///
/// Detectors calibrated against the same noise variance share one batch. Validation
/// always uses the true noise variance, so with `uncertainty != 1` the empirical Pf of
/// noise-dependent detectors drifts away from the target.
pub fn calibrate_many(
    detectors: &[DetectorSpec],
    noise: &NoiseModel,
    target_pf: f64,
    trials: usize,
    master_seed: u64,
) -> Vec<Result<CalibrationResult>> {
    if let Err(e) = check_pf(target_pf) {
        let msg = e.to_string();
        return detectors
            .iter()
            .map(|_| Err(Error::InvalidArgument(msg.clone())))
            .collect();
    }
    if trials == 0 {
        return detectors
            .iter()
            .map(|_| Err(Error::InvalidArgument("calibration needs at least one trial".into())))
            .collect();
    }

    let mut results: Vec<Option<Result<CalibrationResult>>> = detectors.iter().map(|_| None).collect();
    for (i, d) in detectors.iter().enumerate() {
        if let Err(e) = d.prior.check(d.kind) {
            results[i] = Some(Err(e));
        }
    }

    // Group by calibration noise level; levels are compared bitwise.
    let mut levels: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, d) in detectors.iter().enumerate() {
        if results[i].is_none() {
            levels
                .entry(noise.assumed_sigma2(d.kind).to_bits())
                .or_default()
                .push(i);
        }
    }

    let mut thresholds: Vec<Option<f64>> = vec![None; detectors.len()];
    for (bits, members) in &levels {
        let specs: Vec<&DetectorSpec> = members.iter().map(|&i| &detectors[i]).collect();
        let batch = noise_statistics(
            &specs,
            noise,
            f64::from_bits(*bits),
            trials,
            mix64(master_seed, CALIBRATION_STREAM),
        );
        for (&i, column) in members.iter().zip(batch) {
            match column.and_then(|samples| threshold_from_samples(&samples, target_pf)) {
                Ok(gamma) => thresholds[i] = Some(gamma),
                Err(e) => results[i] = Some(Err(e)),
            }
        }
    }

    let calibrated: Vec<usize> = (0..detectors.len()).filter(|&i| thresholds[i].is_some()).collect();
    let specs: Vec<&DetectorSpec> = calibrated.iter().map(|&i| &detectors[i]).collect();
    let validation = noise_statistics(
        &specs,
        noise,
        noise.sigma2,
        trials,
        mix64(master_seed, VALIDATION_STREAM),
    );
    for (&i, column) in calibrated.iter().zip(validation) {
        let threshold = thresholds[i].expect("calibrated");
        results[i] = Some(column.map(|samples| CalibrationResult {
            detector: detectors[i].kind,
            threshold,
            target_pf,
            trials,
            empirical_pf: exceedance_rate(&samples, threshold),
            master_seed,
        }));
    }
    results.into_iter().map(|r| r.expect("every detector resolved")).collect()
}

/// Threshold for one detector at the target false-alarm rate. See [`calibrate_many`].
pub fn calibrate_threshold(
    detector: &DetectorSpec,
    noise: &NoiseModel,
    target_pf: f64,
    trials: usize,
    master_seed: u64,
) -> Result<CalibrationResult> {
    calibrate_many(std::slice::from_ref(detector), noise, target_pf, trials, master_seed)
        .pop()
        .expect("one result per detector")
}

fn detection_stream(master_seed: u64, snr_db: f64) -> u64 {
    mix64(mix64(master_seed, DETECTION_STREAM), snr_db.to_bits())
}

/// Signal-plus-noise segment for H1 trial `t` of a batch.
pub fn h1_segment(
    signal: &SignalModel,
    count_ns: usize,
    snr: &SnrSpec,
    batch_seed: u64,
    t: usize,
) -> Result<SensingSegment> {
    let seed = mix64(batch_seed, t as u64);
    let clean = signal.generate(count_ns, mix64(seed, 0))?;
    mix_at_snr(clean, Some(signal.power_per_entry()), snr, mix64(seed, 1))
}

fn detection_counts(
    detectors: &[(&DetectorSpec, f64)],
    signal: &SignalModel,
    count_ns: usize,
    snr: &SnrSpec,
    trials: usize,
    master_seed: u64,
) -> Vec<Result<usize>> {
    let stream = detection_stream(master_seed, snr.snr_db);
    let specs: Vec<&DetectorSpec> = detectors.iter().map(|(d, _)| *d).collect();
    let per_trial = map_indices(trials, |t| {
        let segment = h1_segment(signal, count_ns, snr, stream, t)?;
        Ok(evaluate_segment(&specs, &segment))
    });
    transpose(detectors.len(), trials, per_trial)
        .into_iter()
        .zip(detectors)
        .map(|(column, (_, threshold))| {
            column.map(|values| values.iter().filter(|&&v| v > *threshold).count())
        })
        .collect()
}

/// Fraction of signal-present trials in which the statistic exceeds `threshold`.
///
/// Trial data depend only on `(master_seed, snr_db, t)`, so this agrees with the
/// corresponding point of [`snr_sweep`].
pub fn estimate_pd(
    detector: &DetectorSpec,
    threshold: f64,
    signal: &SignalModel,
    count_ns: usize,
    snr: &SnrSpec,
    trials: usize,
    master_seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    detector.prior.check(detector.kind)?;
    let count = detection_counts(&[(detector, threshold)], signal, count_ns, snr, trials, master_seed)
        .pop()
        .expect("one detector")?;
    Ok(count as f64 / trials as f64)
}

/// Everything that determines a sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub detectors: Vec<DetectorSpec>,
    pub signal: SignalModel,
    pub noise: NoiseModel,
    pub snr_grid: Vec<f64>,
    pub target_pf: f64,
    pub trials_per_point: usize,
    pub calibration_trials: usize,
    pub master_seed: u64,
}

/// Configuration echo stored with a sweep result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSnapshot {
    pub order_n: usize,
    pub count_ns: usize,
    pub signal_model: String,
    pub sigma2: f64,
    pub noise_uncertainty: f64,
    pub target_pf: f64,
    pub trials_per_point: usize,
    pub calibration_trials: usize,
    pub detectors: Vec<DetectorKind>,
    pub snr_grid: Vec<f64>,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub pd: BTreeMap<DetectorKind, f64>,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: SweepSnapshot,
    pub calibrations: Vec<CalibrationResult>,
    /// Rows sorted by ascending SNR.
    pub rows: Vec<SweepRow>,
    /// Detectors that failed, with the first error each one hit.
    pub errors: BTreeMap<DetectorKind, String>,
}

impl SweepResult {
    /// Pd curve of one detector, in grid order.
    pub fn curve(&self, detector: DetectorKind) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.pd.get(&detector).map(|&pd| (r.snr_db, pd)))
            .collect()
    }

    /// Lowest grid SNR at which the detector's Pd reaches `pd`.
    pub fn lowest_snr_reaching(&self, detector: DetectorKind, pd: f64) -> Option<f64> {
        self.curve(detector)
            .into_iter()
            .find(|&(_, p)| p >= pd)
            .map(|(snr, _)| snr)
    }
}

/// Calibrates every detector once, then evaluates all of them on one shared batch of
/// signal-plus-noise segments per SNR point.
///
/// A detector that fails is reported in [`SweepResult::errors`] and left out of the
/// rows; the others carry on.
pub fn snr_sweep(config: &SweepConfig) -> Result<SweepResult> {
    if config.detectors.is_empty() {
        return Err(Error::InvalidArgument("no detectors to sweep".into()));
    }
    if config.snr_grid.is_empty() {
        return Err(Error::InvalidArgument("empty SNR grid".into()));
    }
    if config.snr_grid.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("SNR grid contains NaN".into()));
    }
    if config.trials_per_point == 0 {
        return Err(Error::InvalidArgument("need at least one trial per point".into()));
    }
    if config.signal.order_n() != config.noise.order_n {
        return Err(Error::DimensionMismatch {
            expected: config.noise.order_n,
            actual: config.signal.order_n(),
        });
    }
    let mut kinds: Vec<DetectorKind> = config.detectors.iter().map(|d| d.kind).collect();
    kinds.sort();
    if kinds.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate detector in sweep".into()));
    }
    let mut grid = config.snr_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut errors = BTreeMap::new();
    let mut calibrations = Vec::new();
    let mut active: Vec<(&DetectorSpec, f64)> = Vec::new();
    let calibrated = calibrate_many(
        &config.detectors,
        &config.noise,
        config.target_pf,
        config.calibration_trials,
        config.master_seed,
    );
    for (spec, result) in config.detectors.iter().zip(calibrated) {
        match result {
            Ok(c) => {
                active.push((spec, c.threshold));
                calibrations.push(c);
            }
            Err(e) => {
                errors.insert(spec.kind, e.to_string());
            }
        }
    }

    let mut counts: Vec<Vec<Option<usize>>> = Vec::with_capacity(grid.len());
    for &snr_db in &grid {
        let snr = SnrSpec::new(snr_db, config.noise.sigma2)?;
        let point = detection_counts(
            &active,
            &config.signal,
            config.noise.count_ns,
            &snr,
            config.trials_per_point,
            config.master_seed,
        );
        let mut row = Vec::with_capacity(active.len());
        for ((spec, _), c) in active.iter().zip(point) {
            match c {
                Ok(c) => row.push(Some(c)),
                Err(e) => {
                    errors.entry(spec.kind).or_insert_with(|| e.to_string());
                    row.push(None);
                }
            }
        }
        counts.push(row);
    }

    let rows = grid
        .iter()
        .zip(&counts)
        .map(|(&snr_db, point)| SweepRow {
            snr_db,
            pd: active
                .iter()
                .zip(point)
                .filter(|((spec, _), _)| !errors.contains_key(&spec.kind))
                .filter_map(|((spec, _), c)| {
                    c.map(|c| (spec.kind, c as f64 / config.trials_per_point as f64))
                })
                .collect(),
            trials: config.trials_per_point,
            master_seed: config.master_seed,
        })
        .collect();
    calibrations.retain(|c| !errors.contains_key(&c.detector));

    Ok(SweepResult {
        config: SweepSnapshot {
            order_n: config.noise.order_n,
            count_ns: config.noise.count_ns,
            signal_model: config.signal.name().to_string(),
            sigma2: config.noise.sigma2,
            noise_uncertainty: config.noise.uncertainty,
            target_pf: config.target_pf,
            trials_per_point: config.trials_per_point,
            calibration_trials: config.calibration_trials,
            detectors: config.detectors.iter().map(|d| d.kind).collect(),
            snr_grid: grid,
            master_seed: config.master_seed,
        },
        calibrations,
        rows,
        errors,
    })
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub snr_db: f64,
    pub detector: DetectorKind,
    pub pd: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Flattens a sweep into CSV rows, detectors in lexicographic name order within each
/// SNR.
pub fn csv_rows(result: &SweepResult) -> Vec<CsvRow> {
    let mut out = Vec::new();
    for row in &result.rows {
        let mut detectors: Vec<(&DetectorKind, &f64)> = row.pd.iter().collect();
        detectors.sort_by_key(|(d, _)| d.name());
        for (&detector, &pd) in detectors {
            out.push(CsvRow {
                snr_db: row.snr_db,
                detector,
                pd,
                trials: row.trials,
                seed: row.master_seed,
            });
        }
    }
    out
}

/// CSV text with header `snr_db,detector,pd,trials,seed`. Floats use the shortest
/// decimal that parses back to the same value.
pub fn export_rows(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in csv_rows(result) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.snr_db,
            r.detector.name(),
            r.pd,
            r.trials,
            r.seed
        );
    }
    out
}

pub fn parse_rows(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::MalformedCsv(format!(
                "expected header `{CSV_HEADER}`, found {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = |what: &str| Error::MalformedCsv(format!("line {}: bad {what}", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(bad("field count"));
            }
            Ok(CsvRow {
                snr_db: fields[0].parse().map_err(|_| bad("snr_db"))?,
                detector: fields[1].parse().map_err(|_| bad("detector"))?,
                pd: fields[2].parse().map_err(|_| bad("pd"))?,
                trials: fields[3].parse().map_err(|_| bad("trials"))?,
                seed: fields[4].parse().map_err(|_| bad("seed"))?,
            })
        })
        .collect()
}
