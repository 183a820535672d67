//! Generate, learn, store, reload and detect, end to end through the public API.

use sensekit::detectors::{decide, Decision, DetectorKind, Observation, PriorKnowledge};
use sensekit::feature::{feature_similarity, fla_learn, load_feature_for, save_feature};
use sensekit::linalg::build_sensing_vectors;
use sensekit::signal::{
    ar1_feature, gen_ar1_stream, gen_noise_segment, load_stream, mix64, write_stream, Ar1Params,
    StreamFormat,
};

const N: usize = 16;
const NS: usize = 5_000;

fn ar1_segments(seed: u64, count: usize) -> Vec<sensekit::SensingSegment> {
    let params = Ar1Params::new(0.9, 1.0).unwrap();
    let block = NS + N - 1;
    let stream = gen_ar1_stream(&params, block * count, seed);
    stream
        .chunks_exact(block)
        .map(|c| build_sensing_vectors(c, N, NS).unwrap())
        .collect()
}

#[test]
fn learned_feature_survives_disk_and_drives_detection() {
    let dir = tempfile::tempdir().unwrap();
    let learned = fla_learn(&ar1_segments(3, 4), 0.8).unwrap().expect("AR(1) is learnable");
    let truth = ar1_feature(N, 0.9).unwrap();
    assert!(feature_similarity(&learned.feature, &truth).unwrap().value() > 0.99);

    let path = dir.path().join("phi.toml");
    save_feature(&learned, &path).unwrap();
    let loaded = load_feature_for(&path, N).unwrap();
    assert_eq!(loaded, learned);
    assert!(load_feature_for(&path, N + 1).is_err());

    let prior = PriorKnowledge::none().with_phi_s1(loaded.feature);
    let signal = Observation::from_segment(&ar1_segments(99, 1)[0]);
    let noise = Observation::from_segment(&gen_noise_segment(N, NS, 1.0, mix64(99, 1)).unwrap());
    for d in [DetectorKind::Case3, DetectorKind::Ftm] {
        let s1 = d.evaluate(&signal, &prior).unwrap();
        let s0 = d.evaluate(&noise, &prior).unwrap();
        assert!(s1.value > s0.value, "{d}: {} vs {}", s1.value, s0.value);
        let mid = (s1.value + s0.value) / 2.0;
        assert_eq!(decide(s1, mid), Decision::H1);
        assert_eq!(decide(s0, mid), Decision::H0);
    }
}

#[test]
fn stream_files_round_trip_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let samples = gen_ar1_stream(&Ar1Params::new(0.5, 1.0).unwrap(), 257, 8);
    for format in [StreamFormat::F64Le, StreamFormat::DecimalText, StreamFormat::F32Le] {
        let path = dir.path().join(format!("s.{format}"));
        write_stream(&path, &samples, format).unwrap();
        let back = load_stream(&path, format).unwrap();
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(&back) {
            match format {
                StreamFormat::F32Le => assert_eq!(*b, *a as f32 as f64),
                _ => assert_eq!(a.to_bits(), b.to_bits()),
            }
        }
    }
    let f64_path = dir.path().join("s.f64le-raw");
    assert_eq!(std::fs::metadata(f64_path).unwrap().len(), 257 * 8);
}
