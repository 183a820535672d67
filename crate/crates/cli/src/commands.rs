use std::collections::hash_map::RandomState;
use std::fmt;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::json;

use sensekit::detectors::{decide, DetectorKind, Observation, PriorKnowledge};
use sensekit::feature::{fla_learn, load_feature_for, save_feature};
use sensekit::harness::{
    calibrate_many, calibrate_threshold, export_rows, model_priors, recommended_trials,
    snr_sweep, DetectorSpec, NoiseModel, SweepConfig,
};
use sensekit::linalg::{build_sensing_vectors, CovarianceEstimate, Feature, SensingSegment};
use sensekit::signal::{
    ar1_feature, gen_ar1_stream, gen_rank1_segment, load_stream, mix64, mix_at_snr,
    write_stream, Ar1Params, Rank1Model, SignalModel, SnrSpec, StreamFormat,
};

use crate::args::{
    to_flags, CalibrateArgs, Cli, Command, Common, GenArgs, InputArgs, Layout, LearnArgs, Model,
    ReplayArgs, SenseArgs, SweepArgs,
};
use crate::manifest::{self, Manifest};
use crate::plot::{line_chart, Series};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs that do not fit them. Exit code 2.
    Usage(String),
    /// Everything else. Exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<sensekit::Error> for CliError {
    fn from(e: sensekit::Error) -> Self {
        use sensekit::Error as E;
        match e {
            E::MissingPrior { detector, field } => Self::Usage(format!(
                "missing prior `{field}` for {detector} (pass {})",
                prior_flag(field)
            )),
            E::InvalidArgument(_)
            | E::DimensionMismatch { .. }
            | E::StreamTooShort { .. }
            | E::TooFewSegments(_) => Self::Usage(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn prior_flag(field: &str) -> &'static str {
    match field {
        "phi_s1" => "--feature",
        "sigma2" => "--sigma2",
        "lambda_s1" => "--lambda",
        _ => "--lambda and --feature",
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => with_jobs(a.common.jobs, || gen(a)),
        Command::Learn(a) => with_jobs(a.common.jobs, || learn(a)),
        Command::Sense(a) => with_jobs(a.common.jobs, || sense(a)),
        Command::Calibrate(a) => with_jobs(a.common.jobs, || calibrate(a)),
        Command::Sweep(a) => with_jobs(a.common.jobs, || sweep(a)),
        Command::Replay(a) => replay(a),
    }
}

fn with_jobs(jobs: Option<usize>, f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn resolve_seed(common: &mut Common) -> u64 {
    *common.seed.get_or_insert_with(|| {
        let mut h = RandomState::new().build_hasher();
        h.write_u128(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos())
                .unwrap_or_default(),
        );
        let seed = h.finish();
        eprintln!("seed={seed} (generated)");
        seed
    })
}

fn write_manifest<T: Serialize>(
    command: &str,
    seed: u64,
    args: &T,
    path: &Path,
    artifacts: &[&Path],
    results: serde_json::Value,
) -> Result<()> {
    let mut m = Manifest::new(command, seed, args, to_flags(args), results);
    for a in artifacts {
        m.add_artifact(a)?;
    }
    m.write(path)?;
    Ok(())
}

fn replay(a: ReplayArgs) -> Result<()> {
    let m = Manifest::read(&a.manifest).map_err(CliError::Usage)?;
    if m.command == "replay" {
        return Err(CliError::Usage("manifest records a replay".into()));
    }
    let mut argv = vec!["sensekit".to_string(), m.command.clone()];
    argv.extend(m.argv);
    argv.extend(a.overrides);
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}

/// Metadata written next to every generated sample file.
#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub sample_count: usize,
    pub layout: Layout,
    #[serde(default)]
    pub order_n: Option<usize>,
    pub description: String,
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn gen(mut a: GenArgs) -> Result<()> {
    let seed = resolve_seed(&mut a.common);
    let snr = a.snr.map(|db| SnrSpec::new(db, a.sigma2)).transpose()?;
    let (samples, layout, order_n, description) = match a.model {
        Model::Ar1 | Model::White => {
            let len = a
                .len
                .filter(|&l| l > 0)
                .ok_or_else(|| CliError::Usage("--len (>= 1) is required for stream models".into()))?;
            let coefficient = if a.model == Model::Ar1 { a.a } else { 0.0 };
            let params = Ar1Params::new(coefficient, a.var)?;
            let mut stream = gen_ar1_stream(&params, len, mix64(seed, 0));
            let mut description = match a.model {
                Model::Ar1 => format!("AR(1) stream, a={}, variance={}", a.a, a.var),
                _ => format!("white stream, variance={}", a.var),
            };
            if let Some(snr) = &snr {
                if len < 2 {
                    return Err(CliError::Usage("--snr needs --len >= 2".into()));
                }
                let as_row = SensingSegment::from_rows(len, stream)?;
                stream = mix_at_snr(as_row, Some(a.var), snr, mix64(seed, 1))?.into_vec();
                description.push_str(&format!(", plus white noise sigma2={} at {} dB", a.sigma2, snr.snr_db));
            }
            (stream, Layout::Stream, None, description)
        }
        Model::Rank1 => {
            let (n, ns) = match (a.n, a.ns) {
                (Some(n), Some(ns)) => (n, ns),
                _ => return Err(CliError::Usage("--n and --ns are required for rank1".into())),
            };
            let phi = match &a.feature {
                Some(path) => load_feature_for(existing(path)?, n)?.feature,
                None => ar1_feature(n, a.a)?,
            };
            let model = Rank1Model::new(a.var * n as f64, phi)?;
            let mut segment = gen_rank1_segment(&model, ns, mix64(seed, 0))?;
            let mut description = format!("rank-1 vectors, N={n}, power per entry={}", a.var);
            if let Some(snr) = &snr {
                segment = mix_at_snr(segment, Some(a.var), snr, mix64(seed, 1))?;
                description.push_str(&format!(", plus white noise sigma2={} at {} dB", a.sigma2, snr.snr_db));
            }
            (segment.into_vec(), Layout::Vectors, Some(n), description)
        }
    };
    write_stream(&a.out, &samples, a.format)?;
    let sidecar = Sidecar {
        format: a.format.to_string(),
        sample_count: samples.len(),
        layout,
        order_n,
        description,
    };
    let meta = sidecar_path(&a.out);
    std::fs::write(
        &meta,
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n",
    )?;
    let manifest_path = a.common.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out));
    write_manifest(
        "gen",
        seed,
        &a,
        &manifest_path,
        &[&a.out, &meta],
        json!({ "sample_count": samples.len(), "layout": layout }),
    )?;
    println!(
        "wrote {} ({} samples, {} layout)",
        a.out.display(),
        samples.len(),
        layout.as_str()
    );
    Ok(())
}

fn existing(path: &Path) -> Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::Usage(format!("{} does not exist", path.display())))
    }
}

struct Input {
    samples: Vec<f64>,
    layout: Layout,
    order_n: Option<usize>,
}

fn load_input(args: &InputArgs) -> Result<Input> {
    let path = existing(&args.input)?;
    let meta = sidecar_path(path);
    let sidecar: Option<Sidecar> = if meta.exists() {
        let text = std::fs::read_to_string(&meta)?;
        Some(serde_json::from_str(&text).map_err(|e| {
            CliError::Runtime(format!("bad sidecar {}: {e}", meta.display()))
        })?)
    } else {
        None
    };
    let format = match (args.format, &sidecar) {
        (Some(f), _) => f,
        (None, Some(s)) => s.format.parse()?,
        (None, None) => StreamFormat::F64Le,
    };
    let layout = args
        .layout
        .or(sidecar.as_ref().map(|s| s.layout))
        .unwrap_or(Layout::Stream);
    let samples = load_stream(path, format)?;
    Ok(Input {
        samples,
        layout,
        order_n: sidecar.and_then(|s| s.order_n),
    })
}

impl Input {
    fn check_order(&self, n: usize) -> Result<()> {
        match self.order_n {
            Some(m) if self.layout == Layout::Vectors && m != n => Err(CliError::Usage(format!(
                "input holds vectors of length {m}, but --n is {n}"
            ))),
            _ => Ok(()),
        }
    }

    /// Samples consumed by one segment of `ns` vectors.
    fn block(&self, n: usize, ns: usize) -> usize {
        match self.layout {
            Layout::Stream => ns + n - 1,
            Layout::Vectors => n * ns,
        }
    }

    /// Largest `Ns` a single segment can have.
    fn max_ns(&self, n: usize) -> usize {
        let len = self.samples.len();
        match self.layout {
            Layout::Stream => (len + 1).saturating_sub(n),
            Layout::Vectors => len / n,
        }
    }

    fn segment(&self, n: usize, ns: usize, index: usize) -> Result<SensingSegment> {
        let block = self.block(n, ns);
        let start = index * block;
        let end = start + block;
        if end > self.samples.len() {
            return Err(sensekit::Error::StreamTooShort {
                required: end,
                actual: self.samples.len(),
            }
            .into());
        }
        let chunk = &self.samples[start..end];
        Ok(match self.layout {
            Layout::Stream => build_sensing_vectors(chunk, n, ns)?,
            Layout::Vectors => SensingSegment::from_rows(n, chunk.to_vec())?,
        })
    }
}

fn learn(mut a: LearnArgs) -> Result<()> {
    let seed = resolve_seed(&mut a.common);
    let input = load_input(&a.input)?;
    input.check_order(a.n)?;
    if a.n < 2 || a.ns == 0 {
        return Err(CliError::Usage("need --n >= 2 and --ns >= 1".into()));
    }
    let block = input.block(a.n, a.ns);
    let count = input.samples.len() / block;
    if count < 2 {
        return Err(CliError::Usage(format!(
            "input holds {} samples; learning needs at least two segments ({} samples)",
            input.samples.len(),
            2 * block
        )));
    }
    let segments = (0..count)
        .map(|k| input.segment(a.n, a.ns, k))
        .collect::<Result<Vec<_>>>()?;
    let created_at = a
        .created_at
        .get_or_insert_with(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        .clone();
    let Some(mut learned) = fla_learn(&segments, a.te)? else {
        return Err(CliError::Runtime(format!(
            "feature not learned: no consecutive pair among {count} segments has similarity above {}",
            a.te
        )));
    };
    let source = a
        .input
        .input
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    learned.created_at = created_at;
    learned.provenance = format!("fla:{source}");
    save_feature(&learned, &a.out)?;
    let manifest_path = a.common.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out));
    write_manifest(
        "learn",
        seed,
        &a,
        &manifest_path,
        &[&a.out],
        json!({ "similarity": learned.similarity_at_learning, "segments": count }),
    )?;
    println!(
        "learned feature similarity={} te={} segments={count} out={}",
        learned.similarity_at_learning,
        a.te,
        a.out.display()
    );
    Ok(())
}

/// Priors from the flags. With both `lambda` and a feature, EC gets the rank-1 signal
/// covariance `lambda * phi phi^T`.
fn flag_priors(
    order_n: usize,
    feature: Option<&Path>,
    sigma2: Option<f64>,
    lambda: Option<f64>,
) -> Result<PriorKnowledge> {
    let mut prior = PriorKnowledge::none();
    let phi: Option<Feature> = match feature {
        Some(path) => Some(load_feature_for(existing(path)?, order_n)?.feature),
        None => None,
    };
    if let Some(s) = sigma2 {
        prior = prior.with_sigma2(s);
    }
    if let Some(l) = lambda {
        prior = prior.with_lambda_s1(l);
        if let Some(phi) = &phi {
            prior = prior.with_signal_covariance(CovarianceEstimate::rank_one(l, phi.values()))?;
        }
    }
    if let Some(phi) = phi {
        prior = prior.with_phi_s1(phi);
    }
    Ok(prior)
}

fn sense(mut a: SenseArgs) -> Result<()> {
    let seed = resolve_seed(&mut a.common);
    let input = load_input(&a.input)?;
    input.check_order(a.n)?;
    if a.n < 2 {
        return Err(CliError::Usage("need --n >= 2".into()));
    }
    let ns = a.ns.unwrap_or_else(|| input.max_ns(a.n));
    if ns == 0 {
        return Err(CliError::Usage("input is shorter than one vector".into()));
    }
    let segment = input.segment(a.n, ns, a.segment)?;
    let prior = flag_priors(a.n, a.feature.as_deref(), a.sigma2, a.lambda)?;
    prior.check(a.detector)?;

    let threshold = match a.threshold {
        Some(t) if t.is_nan() => return Err(CliError::Usage("threshold is NaN".into())),
        Some(t) => t,
        None => {
            let noise = NoiseModel::new(a.n, ns, a.sigma2.unwrap_or(1.0))?;
            let spec = DetectorSpec::new(a.detector, prior.clone())?;
            calibrate_threshold(&spec, &noise, a.pf, a.trials, seed)?.threshold
        }
    };
    let obs = Observation::from_segment(&segment);
    let stat = a.detector.evaluate(&obs, &prior)?;
    let decision = decide(stat, threshold);
    println!(
        "detector={} statistic={} threshold={} decision={decision}",
        a.detector.name(),
        stat.value,
        threshold
    );
    if let Some(path) = a.common.manifest.clone() {
        write_manifest(
            "sense",
            seed,
            &a,
            &path,
            &[],
            json!({
                "statistic": stat.value,
                "threshold": threshold.to_string(),
                "decision": decision.to_string(),
            }),
        )?;
    }
    Ok(())
}

fn parse_detectors(list: &str) -> Result<Vec<DetectorKind>> {
    if list.trim() == "all" {
        return Ok(DetectorKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind: DetectorKind = name.parse()?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no detectors given".into()));
    }
    Ok(out)
}

/// `start:stop:step` (inclusive) or a comma-separated list, in dB.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("bad SNR grid `{spec}`"));
    let num = |s: &str| s.trim().replace('\u{2212}', "-").parse::<f64>().map_err(|_| bad());
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(bad());
        }
        (0..count)
            .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(num)
            .collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

fn calibrate(mut a: CalibrateArgs) -> Result<()> {
    let seed = resolve_seed(&mut a.common);
    let all = a.detectors.trim() == "all";
    let kinds = parse_detectors(&a.detectors)?;
    let noise = NoiseModel::new(a.n, a.ns, a.sigma2)?.with_uncertainty(a.uncertainty)?;
    if a.trials < recommended_trials(a.pf) {
        eprintln!(
            "warning: {} trials is below the recommended {} for pf={}",
            a.trials,
            recommended_trials(a.pf),
            a.pf
        );
    }
    let prior = flag_priors(
        a.n,
        a.feature.as_deref(),
        Some(a.sigma2 * a.uncertainty),
        a.lambda,
    )?;
    let mut specs = Vec::new();
    for kind in kinds {
        match DetectorSpec::new(kind, prior.clone()) {
            Ok(s) => specs.push(s),
            Err(e) if all => eprintln!("skipping {kind}: {}", CliError::from(e)),
            Err(e) => return Err(e.into()),
        }
    }
    if specs.is_empty() {
        return Err(CliError::Usage("no detector has the priors it needs".into()));
    }
    let results = calibrate_many(&specs, &noise, a.pf, a.trials, seed);
    let mut ok = Vec::new();
    let mut failed = serde_json::Map::new();
    for (spec, r) in specs.iter().zip(results) {
        match r {
            Ok(c) => {
                println!(
                    "detector={} threshold={} target_pf={} empirical_pf={} trials={}",
                    c.detector.name(),
                    c.threshold,
                    c.target_pf,
                    c.empirical_pf,
                    c.trials
                );
                ok.push(c);
            }
            Err(e) => {
                eprintln!("error: {}: {e}", spec.kind.name());
                failed.insert(spec.kind.name().into(), e.to_string().into());
            }
        }
    }
    let results = json!({ "calibrations": ok, "errors": failed });
    let mut artifacts: Vec<&Path> = Vec::new();
    if let Some(out) = &a.out {
        std::fs::write(
            out,
            serde_json::to_string_pretty(&results).expect("results serialize") + "\n",
        )?;
        artifacts.push(out);
    }
    let manifest_path = a
        .common
        .manifest
        .clone()
        .or_else(|| a.out.as_deref().map(manifest::default_path));
    if let Some(path) = manifest_path {
        write_manifest("calibrate", seed, &a, &path, &artifacts, results)?;
    }
    if !failed.is_empty() {
        return Err(CliError::Runtime(format!("{} detector(s) failed", failed.len())));
    }
    Ok(())
}

fn sweep(mut a: SweepArgs) -> Result<()> {
    let seed = resolve_seed(&mut a.common);
    let kinds = parse_detectors(&a.detectors)?;
    let grid = parse_grid(&a.snr)?;
    let noise = NoiseModel::new(a.n, a.ns, a.sigma2)?.with_uncertainty(a.uncertainty)?;
    let learned = match &a.feature {
        Some(path) => Some(load_feature_for(existing(path)?, a.n)?.feature),
        None => None,
    };
    let signal = match a.model {
        Model::Rank1 => {
            let phi = match &learned {
                Some(f) => f.clone(),
                None => ar1_feature(a.n, a.a)?,
            };
            SignalModel::Rank1Vector(Rank1Model::new(a.n as f64, phi)?)
        }
        Model::Ar1 => SignalModel::Ar1Stream {
            order_n: a.n,
            params: Ar1Params::new(a.a, 1.0)?,
        },
        Model::White => SignalModel::WhiteStream {
            order_n: a.n,
            variance: 1.0,
        },
    };
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let prior_snr = *a.prior_snr.get_or_insert((lo + hi) / 2.0);
    let calibration_trials = *a
        .calibration_trials
        .get_or_insert(a.trials.max(recommended_trials(a.pf)));
    let mut prior = model_priors(&signal, &noise, prior_snr)?;
    if let Some(phi) = learned {
        prior = prior.with_phi_s1(phi);
    }
    let detectors = kinds
        .iter()
        .map(|&k| DetectorSpec::new(k, prior.clone()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let config = SweepConfig {
        detectors,
        signal,
        noise,
        snr_grid: grid,
        target_pf: a.pf,
        trials_per_point: a.trials,
        calibration_trials,
        master_seed: seed,
    };
    let result = snr_sweep(&config)?;
    std::fs::write(&a.out, export_rows(&result))?;
    let mut artifacts: Vec<&Path> = vec![&a.out];
    if let Some(plot) = &a.plot {
        let mut names: Vec<DetectorKind> = result.rows.first().map(|r| r.pd.keys().copied().collect()).unwrap_or_default();
        names.sort_by_key(|d| d.name());
        let series: Vec<Series> = names
            .iter()
            .map(|&d| Series {
                label: d.to_string(),
                points: result.curve(d),
            })
            .collect();
        let title = format!(
            "Pd vs SNR (N={}, Ns={}, Pf={}, {} trials/point)",
            a.n, a.ns, a.pf, a.trials
        );
        std::fs::write(plot, line_chart(&title, "SNR (dB)", "Pd", &series))?;
        artifacts.push(plot);
    }
    let manifest_path = a.common.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out));
    let s90: serde_json::Map<String, serde_json::Value> = kinds
        .iter()
        .filter(|d| !result.errors.contains_key(d))
        .map(|&d| (d.name().to_string(), json!(result.lowest_snr_reaching(d, 0.9))))
        .collect();
    write_manifest(
        "sweep",
        seed,
        &a,
        &manifest_path,
        &artifacts,
        json!({
            "snapshot": result.config,
            "calibrations": result.calibrations,
            "errors": result.errors,
            "snr_at_pd_0.9": s90,
        }),
    )?;
    for (d, v) in &s90 {
        match v.as_f64() {
            Some(snr) => println!("detector={d} snr_at_pd_0.9={snr}"),
            None => println!("detector={d} snr_at_pd_0.9=none"),
        }
    }
    for (d, e) in &result.errors {
        eprintln!("error: {}: {e}", d.name());
    }
    println!("wrote {} ({} rows)", a.out.display(), result.rows.len() * s90.len());
    if s90.is_empty() {
        return Err(CliError::Runtime("every detector failed".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("-3:-1:1").unwrap(), vec![-3.0, -2.0, -1.0]);
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0:0.3:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("5, -2,\u{2212}7").unwrap(), vec![5.0, -2.0, -7.0]);
        for bad in ["", "1:0:1", "0:1:0", "a,b", "1:2", "nan"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn detector_lists() {
        assert_eq!(parse_detectors("all").unwrap().len(), 10);
        assert_eq!(
            parse_detectors("case3, MME,case3").unwrap(),
            vec![DetectorKind::Case3, DetectorKind::Mme]
        );
        assert!(parse_detectors("case9").is_err());
        assert!(parse_detectors(" , ").is_err());
    }

    #[test]
    fn missing_prior_maps_to_usage_with_flag_hint() {
        let e: CliError = sensekit::Error::MissingPrior {
            detector: DetectorKind::Case2,
            field: "phi_s1",
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("phi_s1") && e.to_string().contains("--feature"));
    }
}
