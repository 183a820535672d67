use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

use sensekit::detectors::DetectorKind;
use sensekit::signal::StreamFormat;

#[derive(Debug, Parser)]
#[command(
    name = "sensekit",
    version,
    about = "Covariance-based spectrum sensing: generate data, learn features, detect, calibrate and sweep"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded sample file plus a `.meta.json` sidecar.
    Gen(GenArgs),
    /// Learn the signal feature from a capture.
    Learn(LearnArgs),
    /// Run one detector on one segment and print the decision.
    Sense(SenseArgs),
    /// Calibrate detector thresholds to a false-alarm rate on simulated noise.
    Calibrate(CalibrateArgs),
    /// Monte-Carlo Pd-vs-SNR sweep written as CSV.
    Sweep(SweepArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

/// Flags every run command accepts.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Master seed. Generated and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]. Outputs do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    /// File of `key=value` lines used as default flags. Explicit flags win.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Run manifest path [default: `<out>.manifest.json`].
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Stationary AR(1) stream.
    Ar1,
    /// White Gaussian stream.
    White,
    /// i.i.d. rank-1 vectors along a fixed feature.
    Rank1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// A scalar stream, windowed into overlapping vectors.
    Stream,
    /// Consecutive length-N vectors.
    Vectors,
}

impl Layout {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stream => "stream",
            Self::Vectors => "vectors",
        }
    }
}

fn parse_format(s: &str) -> Result<StreamFormat, String> {
    s.parse().map_err(|e: sensekit::Error| e.to_string())
}

fn parse_detector(s: &str) -> Result<DetectorKind, String> {
    s.parse().map_err(|e: sensekit::Error| e.to_string())
}

fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_opt<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = Model::Ar1)]
    pub model: Model,
    /// AR(1) coefficient. Also shapes the default rank-1 feature.
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    pub a: f64,
    /// Signal power per sample.
    #[arg(long, default_value_t = 1.0)]
    pub var: f64,
    /// Stream length (ar1, white).
    #[arg(long)]
    pub len: Option<usize>,
    /// Vector length (rank1).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of vectors (rank1).
    #[arg(long)]
    pub ns: Option<usize>,
    /// Rank-1 direction [default: leading eigenvector of the AR(1) covariance].
    #[arg(long, value_name = "FILE")]
    pub feature: Option<PathBuf>,
    /// Add white noise so that signal power over noise power is this many dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr: Option<f64>,
    /// Noise variance used with `--snr`.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// f64le-raw, f32le-raw or decimal-text.
    #[arg(long, default_value = "f64le-raw", value_parser = parse_format)]
    #[serde(serialize_with = "display")]
    pub format: StreamFormat,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Where the input samples come from and how they are laid out.
#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    pub input: PathBuf,
    /// Sample encoding [default: from the sidecar, else f64le-raw].
    #[arg(long, value_parser = parse_format)]
    #[serde(serialize_with = "display_opt")]
    pub format: Option<StreamFormat>,
    /// Sample layout [default: from the sidecar, else stream].
    #[arg(long, value_enum)]
    pub layout: Option<Layout>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct LearnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub ns: usize,
    /// Similarity threshold for accepting a feature.
    #[arg(long, default_value_t = sensekit::feature::DEFAULT_THRESHOLD_TE)]
    pub te: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Timestamp stored in the feature file [default: now].
    #[arg(long)]
    pub created_at: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SenseArgs {
    #[arg(long, value_parser = parse_detector)]
    pub detector: DetectorKind,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Vectors in the segment [default: all available].
    #[arg(long)]
    pub ns: Option<usize>,
    /// Index of the segment to test.
    #[arg(long, default_value_t = 0)]
    pub segment: usize,
    /// Decision threshold (`inf` allowed). Calibrated on simulated noise when absent.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(serialize_with = "display_opt")]
    pub threshold: Option<f64>,
    /// Target false-alarm rate for inline calibration.
    #[arg(long, default_value_t = 0.1)]
    pub pf: f64,
    /// Noise-only trials for inline calibration.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Feature file (phi_s1).
    #[arg(long, value_name = "FILE")]
    pub feature: Option<PathBuf>,
    /// Noise variance (sigma2).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Leading signal eigenvalue (lambda_s1). With `--feature` it also gives EC its
    /// rank-1 signal covariance.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct CalibrateArgs {
    /// Comma-separated detector names, or `all`.
    #[arg(long, default_value = "all")]
    pub detectors: String,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub ns: usize,
    /// True noise variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Assumed over true noise variance for detectors that use it.
    #[arg(long, default_value_t = 1.0)]
    pub uncertainty: f64,
    #[arg(long, default_value_t = 0.1)]
    pub pf: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Feature file (phi_s1).
    #[arg(long, value_name = "FILE")]
    pub feature: Option<PathBuf>,
    /// Leading signal eigenvalue (lambda_s1).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// JSON file for the calibration results.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    /// Comma-separated detector names, or `all`.
    #[arg(long, default_value = "all")]
    pub detectors: String,
    #[arg(long, value_enum, default_value_t = Model::Rank1)]
    pub model: Model,
    /// AR(1) coefficient of the signal (or of the default rank-1 feature).
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    pub a: f64,
    /// Feature file: rank-1 direction and phi_s1 prior.
    #[arg(long, value_name = "FILE")]
    pub feature: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub ns: usize,
    #[arg(long, default_value_t = 0.1)]
    pub pf: f64,
    /// Signal-plus-noise trials per SNR point.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Noise-only calibration trials [default: max(trials, 10/pf)].
    #[arg(long)]
    pub calibration_trials: Option<usize>,
    /// SNR grid in dB: `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "-40:-20:1", allow_hyphen_values = true)]
    pub snr: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Assumed over true noise variance for detectors that use it.
    #[arg(long, default_value_t = 1.0)]
    pub uncertainty: f64,
    /// SNR (dB) at which lambda_s1 and R_s priors are taken [default: grid midpoint].
    #[arg(long, allow_negative_numbers = true)]
    pub prior_snr: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also draw Pd vs SNR as SVG.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Extra flags appended to the recorded ones, e.g. `-- --out other.csv`.
    #[arg(last = true)]
    pub overrides: Vec<String>,
}

/// Splices the entries of any `--config FILE` in `argv` in right after the subcommand
/// name, so flags given on the command line come later and override them.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    for (i, arg) in argv.iter().enumerate() {
        let Some(s) = arg.to_str() else { continue };
        if s == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else if s == "--" {
            break;
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", PathBuf::from(&path).display()))?;
    let mut injected = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match value {
            "true" => injected.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => injected.push(OsString::from(format!("--{key}={value}"))),
        }
    }
    let at = argv.len().min(2);
    let mut out = argv[..at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

/// Flags that reproduce `args` exactly, one `--key=value` per set field.
pub fn to_flags<T: Serialize>(args: &T) -> Vec<String> {
    let value = serde_json::to_value(args).expect("arguments serialize");
    let serde_json::Value::Object(map) = value else {
        unreachable!("argument structs serialize as maps")
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = key.replace('_', "-");
        match v {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => out.push(format!("--{flag}")),
            serde_json::Value::String(s) => out.push(format!("--{flag}={s}")),
            other => out.push(format!("--{flag}={other}")),
        }
    }
    out
}
