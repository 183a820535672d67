//! Seeded signal and noise generation, SNR mixing and raw sample I/O.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed. SNR is total
//! signal power over total noise power per vector, `tr(R_s) / (N * sigma2)`, so a
//! rank-1 signal at SNR `s` has `lambda_s1 = N * sigma2 * s`.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{build_sensing_vectors, CovarianceEstimate, Feature, SensingSegment};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` from `master` (splitmix64 avalanche applied
/// twice). Used for per-trial seeds so trials are independent of scheduling order.
pub fn mix64(master: u64, index: u64) -> u64 {
    splitmix64_finalize(
        splitmix64_finalize(master).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
    )
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Target SNR in dB against a white noise floor of variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    pub snr_db: f64,
    pub sigma2: f64,
}

impl SnrSpec {
    pub fn new(snr_db: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        if snr_db.is_nan() {
            return Err(Error::InvalidArgument("SNR is NaN".into()));
        }
        Ok(Self { snr_db, sigma2 })
    }

    /// Unit-variance noise.
    pub fn db(snr_db: f64) -> Result<Self> {
        Self::new(snr_db, 1.0)
    }

    pub fn linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }
}

/// Stationary AR(1) process `x[t] = a x[t-1] + e[t]` with marginal variance `variance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Params {
    coefficient: f64,
    variance: f64,
}

impl Ar1Params {
    pub fn new(coefficient: f64, variance: f64) -> Result<Self> {
        if !(coefficient.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "AR(1) coefficient must satisfy |a| < 1, got {coefficient}"
            )));
        }
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "variance must be nonnegative, got {variance}"
            )));
        }
        Ok(Self {
            coefficient,
            variance,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Toeplitz `variance * a^|i-j|`.
    pub fn population_covariance(&self, order_n: usize) -> CovarianceEstimate {
        let mut entries = vec![0.0; order_n * order_n];
        for i in 0..order_n {
            for j in 0..order_n {
                let lag = i.abs_diff(j) as i32;
                entries[i * order_n + j] = self.variance * self.coefficient.powi(lag);
            }
        }
        CovarianceEstimate::new(order_n, entries).expect("Toeplitz matrix is symmetric")
    }
}

/// Rank-1 vector model `s_j = g_j * sqrt(lambda_s1) * phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Model {
    lambda_s1: f64,
    phi: Feature,
}

impl Rank1Model {
    pub fn new(lambda_s1: f64, phi: Feature) -> Result<Self> {
        if !(lambda_s1 >= 0.0) || !lambda_s1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "signal power must be nonnegative, got {lambda_s1}"
            )));
        }
        Ok(Self { lambda_s1, phi })
    }

    pub fn lambda_s1(&self) -> f64 {
        self.lambda_s1
    }

    pub fn phi(&self) -> &Feature {
        &self.phi
    }

    pub fn order_n(&self) -> usize {
        self.phi.order_n()
    }
}

/// Source of the primary-user signal in simulations.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalModel {
    /// i.i.d. rank-1 vectors.
    Rank1Vector(Rank1Model),
    /// Overlapping windows of an AR(1) stream.
    Ar1Stream { order_n: usize, params: Ar1Params },
    /// Overlapping windows of a white Gaussian stream.
    WhiteStream { order_n: usize, variance: f64 },
}

impl SignalModel {
    pub fn order_n(&self) -> usize {
        match self {
            Self::Rank1Vector(m) => m.order_n(),
            Self::Ar1Stream { order_n, .. } | Self::WhiteStream { order_n, .. } => *order_n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rank1Vector(_) => "rank1",
            Self::Ar1Stream { .. } => "ar1",
            Self::WhiteStream { .. } => "white",
        }
    }

    /// Population covariance `R_s`.
    pub fn population_covariance(&self) -> CovarianceEstimate {
        match self {
            Self::Rank1Vector(m) => CovarianceEstimate::rank_one(m.lambda_s1, m.phi.values()),
            Self::Ar1Stream { order_n, params } => params.population_covariance(*order_n),
            Self::WhiteStream { order_n, variance } => {
                CovarianceEstimate::diagonal(&vec![*variance; *order_n])
            }
        }
    }

    /// `tr(R_s) / N`.
    pub fn power_per_entry(&self) -> f64 {
        match self {
            Self::Rank1Vector(m) => m.lambda_s1 / m.order_n() as f64,
            Self::Ar1Stream { params, .. } => params.variance,
            Self::WhiteStream { variance, .. } => *variance,
        }
    }

    /// Same model rescaled so that `tr(R_s) / N = power`.
    pub fn with_power_per_entry(&self, power: f64) -> Result<Self> {
        Ok(match self {
            Self::Rank1Vector(m) => {
                Self::Rank1Vector(Rank1Model::new(power * m.order_n() as f64, m.phi.clone())?)
            }
            Self::Ar1Stream { order_n, params } => Self::Ar1Stream {
                order_n: *order_n,
                params: Ar1Params::new(params.coefficient, power)?,
            },
            Self::WhiteStream { order_n, .. } => Self::WhiteStream {
                order_n: *order_n,
                variance: power,
            },
        })
    }

    /// Noiseless segment of `ns` vectors.
    pub fn generate(&self, ns: usize, seed: u64) -> Result<SensingSegment> {
        match self {
            Self::Rank1Vector(m) => gen_rank1_segment(m, ns, seed),
            Self::Ar1Stream { order_n, params } => {
                let stream = gen_ar1_stream(params, ns + order_n - 1, seed);
                build_sensing_vectors(&stream, *order_n, ns)
            }
            Self::WhiteStream { order_n, variance } => {
                let params = Ar1Params::new(0.0, *variance)?;
                let stream = gen_ar1_stream(&params, ns + order_n - 1, seed);
                build_sensing_vectors(&stream, *order_n, ns)
            }
        }
    }
}

/// Leading eigenvector of the AR(1) population covariance of order `order_n`.
pub fn ar1_feature(order_n: usize, coefficient: f64) -> Result<Feature> {
    let params = Ar1Params::new(coefficient, 1.0)?;
    Ok(crate::linalg::eigendecompose(&params.population_covariance(order_n))?.leading_feature())
}

fn check_shape(n: usize, ns: usize) -> Result<()> {
    if n < 2 || ns == 0 {
        return Err(Error::InvalidArgument(format!(
            "need N >= 2 and Ns >= 1, got N={n}, Ns={ns}"
        )));
    }
    Ok(())
}

/// `ns` vectors of i.i.d. `N(0, sigma2)` entries.
pub fn gen_noise_segment(n: usize, ns: usize, sigma2: f64, seed: u64) -> Result<SensingSegment> {
    check_shape(n, ns)?;
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be nonnegative, got {sigma2}"
        )));
    }
    let sd = sigma2.sqrt();
    let mut rng = rng(seed);
    let data = (0..n * ns)
        .map(|_| sd * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect::<Vec<f64>>();
    Ok(SensingSegment::from_rows_unchecked(n, data))
}

/// `ns` i.i.d. rank-1 vectors whose population covariance is `lambda_s1 * phi phi^T`.
pub fn gen_rank1_segment(model: &Rank1Model, ns: usize, seed: u64) -> Result<SensingSegment> {
    let n = model.order_n();
    check_shape(n, ns)?;
    let amp = model.lambda_s1.sqrt();
    let mut rng = rng(seed);
    let mut data = Vec::with_capacity(n * ns);
    for _ in 0..ns {
        let g: f64 = StandardNormal.sample(&mut rng);
        let scale = g * amp;
        data.extend(model.phi.values().iter().map(|p| scale * p));
    }
    Ok(SensingSegment::from_rows_unchecked(n, data))
}

/// `length` samples of a stationary AR(1) process, started from its marginal law.
pub fn gen_ar1_stream(params: &Ar1Params, length: usize, seed: u64) -> Vec<f64> {
    let a = params.coefficient;
    let sd0 = params.variance.sqrt();
    let sd_e = (params.variance * (1.0 - a * a)).sqrt();
    if params.variance == 0.0 {
        // Zero times a negative draw is -0.0; keep silent streams bitwise zero.
        return vec![0.0; length];
    }
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(length);
    let mut x = 0.0;
    for t in 0..length {
        let z: f64 = StandardNormal.sample(&mut rng);
        x = if t == 0 { sd0 * z } else { a * x + sd_e * z };
        out.push(x);
    }
    out
}

/// Scales `signal` to the requested SNR and adds `N(0, sigma2)` noise.
///
/// `signal_power` is the population power per entry, `tr(R_s) / N`, of the unscaled
/// signal. Raw captures have no known population power, so it must be declared.
pub fn mix_at_snr(
    signal: SensingSegment,
    signal_power: Option<f64>,
    snr: &SnrSpec,
    seed: u64,
) -> Result<SensingSegment> {
    let power = signal_power.ok_or(Error::UnknownSignalPower)?;
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "declared signal power must be positive, got {power}"
        )));
    }
    let gain = (snr.sigma2 * snr.linear() / power).sqrt();
    let sd = snr.sigma2.sqrt();
    let mut rng = rng(seed);
    let mut signal = signal;
    for x in signal.as_mut_slice() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *x = gain * *x + sd * z;
    }
    Ok(signal)
}

/// Raw sample encodings accepted by [`load_stream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamFormat {
    F64Le,
    F32Le,
    DecimalText,
}

impl StreamFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::F64Le => "f64le-raw",
            Self::F32Le => "f32le-raw",
            Self::DecimalText => "decimal-text",
        }
    }
}

impl fmt::Display for StreamFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StreamFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64le-raw" | "f64le" | "f64" => Ok(Self::F64Le),
            "f32le-raw" | "f32le" | "f32" => Ok(Self::F32Le),
            "decimal-text" | "text" | "txt" => Ok(Self::DecimalText),
            other => Err(Error::InvalidArgument(format!("unknown sample format `{other}`"))),
        }
    }
}

/// Reads a finite, nonempty sample stream.
pub fn load_stream(path: impl AsRef<Path>, format: StreamFormat) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let malformed = |reason: String| Error::MalformedStream {
        path: path.to_path_buf(),
        reason,
    };
    let bytes = std::fs::read(path)?;
    let samples: Vec<f64> = match format {
        StreamFormat::F64Le => {
            if bytes.len() % 8 != 0 {
                return Err(malformed(format!("{} bytes is not a multiple of 8", bytes.len())));
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect()
        }
        StreamFormat::F32Le => {
            if bytes.len() % 4 != 0 {
                return Err(malformed(format!("{} bytes is not a multiple of 4", bytes.len())));
            }
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
                .collect()
        }
        StreamFormat::DecimalText => {
            let text = String::from_utf8(bytes).map_err(|_| malformed("not UTF-8".into()))?;
            text.split_whitespace()
                .enumerate()
                .map(|(i, tok)| {
                    tok.replace('\u{2212}', "-")
                        .parse::<f64>()
                        .map_err(|_| malformed(format!("token {i} `{tok}` is not a number")))
                })
                .collect::<Result<_>>()?
        }
    };
    if samples.is_empty() {
        return Err(malformed("no samples".into()));
    }
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(malformed(format!("non-finite sample at index {i}")));
    }
    Ok(samples)
}

/// Writes samples in the given encoding. Text output uses shortest round-trip decimals.
pub fn write_stream(path: impl AsRef<Path>, samples: &[f64], format: StreamFormat) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        StreamFormat::F64Le => {
            for x in samples {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        StreamFormat::F32Le => {
            for x in samples {
                out.write_all(&(*x as f32).to_le_bytes())?;
            }
        }
        StreamFormat::DecimalText => {
            for x in samples {
                writeln!(out, "{x}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
