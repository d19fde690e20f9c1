use std::path::{Path, PathBuf};

use sensor_anomaly::ingest::*;
use sensor_anomaly::Error;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn three_row_fixture_in_file_order() {
    let r = parse_raw(&fixture("raw_three.csv")).unwrap();
    let got: Vec<(f64, u32, u32, f64)> = r.iter().map(|r| (r.time, r.tx, r.rx, r.rssi)).collect();
    assert_eq!(got, vec![(0.0, 1, 2, -40.5), (0.1, 2, 1, -41.25), (0.9, 1, 2, -39.75)]);
}

#[test]
fn self_pair_is_rejected_with_its_line() {
    match parse_raw(&fixture("raw_self_pair.csv")) {
        Err(Error::Parse { line, path, .. }) => {
            assert_eq!(line, 3);
            assert!(path.ends_with("raw_self_pair.csv"));
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn header_only_file_is_empty() {
    assert!(parse_raw(&fixture("raw_header_only.csv")).unwrap().is_empty());
}

#[test]
fn two_sensor_fixture_interpolates_and_flags() {
    let records = parse_raw(&fixture("raw_two_sensors.csv")).unwrap();
    let m = synchronize(&records, &[0.0, 1.0, 2.0]).unwrap();
    assert_eq!(m.pair_index, vec![(1, 2), (2, 1)]);
    assert_eq!(m.column(0), vec![-40.0, -42.0, -44.0]);
    assert_eq!(m.column(1), vec![-50.0, -51.0, -52.0]);
    assert_eq!(m.extrapolation_counts(), vec![0, 2]);
    assert!(m.is_extrapolated(0, 1) && !m.is_extrapolated(1, 1) && m.is_extrapolated(2, 1));
    let manifest = m.manifest(None);
    assert_eq!((manifest.sensors, manifest.pairs), (2, 2));
    assert_eq!(manifest.extrapolated.len(), 1);

    let converted = convert_whitespace_log(
        &std::fs::read_to_string(fixture("raw_two_sensors.log")).unwrap(),
        &fixture("raw_two_sensors.log"),
    )
    .unwrap();
    assert_eq!(converted, records);
}

#[test]
fn fourteen_sensor_session_round_trips() {
    let session = synthetic_session(&SessionSpec::default(), 11).unwrap();
    assert_eq!(session.records.len(), 200 * 182);
    let dir = tempfile::tempdir().unwrap();
    let files = write_session(&session, dir.path(), "session").unwrap();
    let parsed = parse_raw(&files.raw).unwrap();
    assert_eq!(parsed, session.records);
    assert_eq!(read_truth_csv(&files.truth).unwrap(), session.truth);

    let m = synchronize(&parsed, &session.grid).unwrap();
    assert_eq!((m.sensors(), m.pairs(), m.instants()), (14, 182, 200));
    let text = m.to_csv_string();
    let back = MeasurementMatrix::parse_csv(&text, Path::new("m.csv")).unwrap();
    assert_eq!(back.to_csv_string(), text);
    for t in 0..m.instants() {
        assert_eq!(back.row(t), m.row(t));
    }
    assert!((0..m.instants()).all(|t| m.row(t).iter().all(|v| v.is_finite())));
}

#[test]
fn detrended_columns_stay_centered() {
    let session = synthetic_session(&SessionSpec::default(), 5).unwrap();
    let m = synchronize(&session.records, &session.grid).unwrap();
    let d = remove_local_means(&m, 51).unwrap();
    let (normal, test) = split_normal_test(&d, 50).unwrap();
    assert_eq!(normal.instants() + test.instants(), 200);
    let truth = align_ground_truth(&session.truth, &test, 50).unwrap();
    assert_eq!(truth.flags.len(), 150);
    assert_eq!(truth.flags.iter().filter(|f| **f).count(), 21);
    for p in 0..d.pairs() {
        let mean = d.column(p).iter().sum::<f64>() / d.instants() as f64;
        assert!(mean.abs() < 1.0, "pair {p} mean {mean}");
    }
}
