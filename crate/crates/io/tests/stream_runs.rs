//! End-to-end runs through `run_stream`: ordering, determinism, rejection
//! handling, and snapshot/restore resume.

use driftband_core::detector::DetectorConfig;
use driftband_core::time::Duration;
use driftband_io::{run_stream, InputFormat, OutputFormat, RecordMapping, RunConfig};

fn detector_config() -> DetectorConfig {
    DetectorConfig::new(Duration::from_hours(10), Duration::from_mins(30))
        .unwrap()
        .with_warmup(Duration::ZERO)
        .unwrap()
}

fn base_config(format: InputFormat) -> RunConfig {
    RunConfig::new(detector_config(), format, RecordMapping::new("ts", "value"))
}

fn csv_stream(n: usize) -> String {
    let mut text = String::from("ts,value\n");
    for i in 0..n {
        let v = 1.0 + 0.01 * ((i % 17) as f64 - 8.0);
        text.push_str(&format!("{},{}\n", 1_000_000 + i * 60, v));
    }
    text
}

#[test]
fn empty_input_yields_zero_summary() {
    let config = base_config(InputFormat::Csv);
    let mut out = Vec::new();
    let summary = run_stream(&config, "".as_bytes(), &mut out).unwrap();
    assert_eq!(summary.samples_in, 0);
    assert_eq!(summary.samples_rejected, 0);
    assert!(out.is_empty());

    let config = base_config(InputFormat::Ndjson);
    let mut out = Vec::new();
    let summary = run_stream(&config, "".as_bytes(), &mut out).unwrap();
    assert_eq!(summary.samples_in, 0);
}

#[test]
fn one_output_record_per_input_record_in_order() {
    let config = base_config(InputFormat::Csv);
    let input = csv_stream(200);
    let mut out = Vec::new();
    let summary = run_stream(&config, input.as_bytes(), &mut out).unwrap();
    assert_eq!(summary.samples_in, 200);
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 201); // header + 200 records
    assert!(lines[0].starts_with("timestamp,"));
    // Input order is preserved: timestamps ascend one minute at a time.
    let mut previous = String::new();
    for line in &lines[1..] {
        let ts = line.split(',').next().unwrap().to_string();
        assert!(ts > previous, "line out of order: {line}");
        previous = ts;
    }
}

#[test]
fn rejections_are_emitted_in_place_and_do_not_mutate_state() {
    let config = base_config(InputFormat::Csv);
    let good = "ts,value\n100,1.0\n160,1.01\n220,0.99\n280,1.02\n";
    let with_bad = "ts,value\n100,1.0\n160,1.01\n190,NaN\n205,\n220,0.99\n280,1.02\n";

    let mut out_good = Vec::new();
    run_stream(&config, good.as_bytes(), &mut out_good).unwrap();
    let mut out_bad = Vec::new();
    let summary = run_stream(&config, with_bad.as_bytes(), &mut out_bad).unwrap();
    assert_eq!(summary.samples_in, 6);
    assert_eq!(summary.samples_rejected, 2);

    let good_lines: Vec<String> = String::from_utf8(out_good)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let bad_lines: Vec<String> = String::from_utf8(out_bad)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# rejected:"))
        .map(String::from)
        .collect();
    // With the rejected records dropped, the verdicts are byte-identical:
    // rejections never touched the detector.
    assert_eq!(good_lines, bad_lines);
}

#[test]
fn identical_input_and_config_produce_byte_identical_output() {
    let config = base_config(InputFormat::Ndjson);
    let mut input = String::new();
    for i in 0..500 {
        let v = 2.0 + 0.05 * ((i % 23) as f64 - 11.0);
        input.push_str(&format!(
            "{{\"ts\": {}, \"value\": {}}}\n",
            5_000 + i * 30,
            v
        ));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_stream(&config, input.as_bytes(), &mut a).unwrap();
    run_stream(&config, input.as_bytes(), &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn snapshot_resume_matches_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = dir.path().join("state.json");
    let input = csv_stream(400);
    let lines: Vec<&str> = input.lines().collect();
    let header = lines[0];
    let first_half = format!("{}\n{}\n", header, lines[1..201].join("\n"));
    let second_half = format!("{}\n{}\n", header, lines[201..].join("\n"));

    let mut full = Vec::new();
    run_stream(&base_config(InputFormat::Csv), input.as_bytes(), &mut full).unwrap();

    let mut config = base_config(InputFormat::Csv);
    config.snapshot_path = Some(snapshot.clone());
    let mut part1 = Vec::new();
    run_stream(&config, first_half.as_bytes(), &mut part1).unwrap();

    let mut config = base_config(InputFormat::Csv);
    config.restore_path = Some(snapshot);
    let mut part2 = Vec::new();
    run_stream(&config, second_half.as_bytes(), &mut part2).unwrap();

    let full_text = String::from_utf8(full).unwrap();
    let part1_text = String::from_utf8(part1).unwrap();
    let part2_text = String::from_utf8(part2).unwrap();
    let resumed: Vec<&str> = part1_text
        .lines()
        .chain(part2_text.lines().skip(1)) // second run re-emits the header
        .collect();
    assert_eq!(full_text.lines().collect::<Vec<_>>(), resumed);
}

#[test]
fn periodic_snapshots_are_resumable_midpoints() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = dir.path().join("state.json");
    let input = csv_stream(100);

    // Snapshot every 40 records: the 80-record mark is the last rewrite
    // before the final one, so interrupting after 100 records and resuming
    // from the final snapshot must equal a straight-through run.
    let mut config = base_config(InputFormat::Csv);
    config.snapshot_path = Some(snapshot.clone());
    config.snapshot_every = Some(40);
    run_stream(&config, input.as_bytes(), &mut Vec::new()).unwrap();
    let final_doc = std::fs::read_to_string(&snapshot).unwrap();

    let mut config = base_config(InputFormat::Csv);
    config.snapshot_path = Some(snapshot.clone());
    run_stream(&config, input.as_bytes(), &mut Vec::new()).unwrap();
    assert_eq!(std::fs::read_to_string(&snapshot).unwrap(), final_doc);

    // An interrupted run leaves the last periodic snapshot behind.
    let partial = {
        let lines: Vec<&str> = input.lines().collect();
        format!("{}\n{}\n", lines[0], lines[1..81].join("\n"))
    };
    let mut config = base_config(InputFormat::Csv);
    config.snapshot_path = Some(snapshot.clone());
    config.snapshot_every = Some(40);
    run_stream(&config, partial.as_bytes(), &mut Vec::new()).unwrap();
    let mut config = base_config(InputFormat::Csv);
    config.restore_path = Some(snapshot);
    let resumed = run_stream(&config, "ts,value\n".as_bytes(), &mut Vec::new());
    assert!(resumed.is_ok());
}

#[test]
fn restore_with_mismatched_config_is_a_startup_error() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = dir.path().join("state.json");
    let input = csv_stream(10);

    let mut config = base_config(InputFormat::Csv);
    config.snapshot_path = Some(snapshot.clone());
    run_stream(&config, input.as_bytes(), &mut Vec::new()).unwrap();

    let mut other = base_config(InputFormat::Csv);
    other.detector = other.detector.with_quantile(0.99).unwrap();
    other.restore_path = Some(snapshot);
    let err = run_stream(&other, input.as_bytes(), &mut Vec::new()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn multi_signal_streams_get_independent_detectors() {
    let mapping = RecordMapping::new("ts", "value").with_signal_field("sensor");
    let mut config = RunConfig::new(detector_config(), InputFormat::Csv, mapping);
    config.output_format = OutputFormat::Csv;
    let mut input = String::from("ts,sensor,value\n");
    for i in 0..100 {
        input.push_str(&format!(
            "{},a,{}\n",
            100 + i * 60,
            1.0 + 0.001 * (i % 5) as f64
        ));
        input.push_str(&format!("{},b,{}\n", 100 + i * 60, 500.0 + (i % 7) as f64));
    }
    // Signal `a` then spikes; `b` stays in range. Only `a` flags.
    input.push_str("6100,a,9.0\n");
    input.push_str("6100,b,503.0\n");

    let mut out = Vec::new();
    let summary = run_stream(&config, input.as_bytes(), &mut out).unwrap();
    assert_eq!(summary.anomalies, 1);
    let text = String::from_utf8(out).unwrap();
    assert!(text
        .lines()
        .next()
        .unwrap()
        .starts_with("signal,timestamp,"));
    let flagged: Vec<&str> = text
        .lines()
        .filter(|l| l.contains(",true,") && l.starts_with("a,"))
        .collect();
    assert!(!flagged.is_empty());
}

#[test]
fn prescale_applies_before_detection() {
    let mut config = base_config(InputFormat::Csv);
    config.prescale = Some((0.001, -1.0));
    let input = "ts,value\n100,1000.0\n160,1001.0\n220,999.5\n";
    let mut out = Vec::new();
    run_stream(&config, input.as_bytes(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    // 1000.0 * 0.001 - 1.0 = 0
    let first = text.lines().nth(1).unwrap();
    assert_eq!(first.split(',').nth(1).unwrap(), "0");
}

#[test]
fn timestamp_regression_emits_warning_record() {
    let config = base_config(InputFormat::Ndjson);
    let input = "{\"ts\": 100, \"value\": 1.0}\n{\"ts\": 160, \"value\": 1.1}\n{\"ts\": 40, \"value\": 1.05}\n";
    let mut out = Vec::new();
    let summary = run_stream(&config, input.as_bytes(), &mut out).unwrap();
    assert_eq!(summary.samples_in, 3);
    assert_eq!(summary.samples_rejected, 0);
    let text = String::from_utf8(out).unwrap();
    let warnings: Vec<&str> = text.lines().filter(|l| l.contains("\"warning\"")).collect();
    assert_eq!(warnings.len(), 1);
    // The regressed record still gets a verdict.
    assert_eq!(text.lines().filter(|l| l.contains("\"score\"")).count(), 3);
}
