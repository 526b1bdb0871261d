//! Drive detectors over an input stream: one verdict or rejection record per
//! input record, in input order, with optional snapshot persistence.
//!
//! Multi-signal streams fan out to one detector per signal id. Records are
//! processed strictly in arrival order (per-signal order is therefore
//! preserved), which also makes the output byte-deterministic.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use driftband_core::detector::{Detector, DetectorConfig};
use driftband_core::rolling::Sample;
use driftband_core::time::Timestamp;
use thiserror::Error;

use crate::emit::{csv_header, emit_output, emit_rejection, emit_warning};
use crate::mapping::{InputFormat, OutputFormat, RecordMapping};
use crate::parse::{ParsedRecord, RecordParser, Rejection};

#[derive(Debug, Error)]
pub enum RunError {
    /// Configuration, input header, or snapshot-restore problems. Exit 1.
    #[error("startup error: {0}")]
    Startup(String),
    /// Input failure after the stream started. Exit 2.
    #[error("input error mid-stream: {0}")]
    Read(String),
    /// Output or snapshot-write failure. Exit 2.
    #[error("output error: {0}")]
    Write(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Startup(_) => 1,
            RunError::Read(_) | RunError::Write(_) => 2,
        }
    }
}

/// Everything a replay run needs besides the byte streams themselves.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub detector: DetectorConfig,
    pub input_format: InputFormat,
    pub output_format: OutputFormat,
    pub mapping: RecordMapping,
    /// Affine pre-scale: value ← a·value + b before detection.
    pub prescale: Option<(f64, f64)>,
    /// Write a final snapshot here on completion.
    pub snapshot_path: Option<PathBuf>,
    /// Additionally rewrite the snapshot every N input records.
    pub snapshot_every: Option<u64>,
    /// Resume from a snapshot written by a previous run with this config.
    pub restore_path: Option<PathBuf>,
    /// Sleep to match inter-arrival gaps (replay clock is otherwise driven
    /// purely by record timestamps).
    pub realtime: bool,
}

impl RunConfig {
    pub fn new(
        detector: DetectorConfig,
        input_format: InputFormat,
        mapping: RecordMapping,
    ) -> Self {
        RunConfig {
            detector,
            input_format,
            output_format: match input_format {
                InputFormat::Csv => OutputFormat::Csv,
                InputFormat::Ndjson => OutputFormat::Ndjson,
            },
            mapping,
            prescale: None,
            snapshot_path: None,
            snapshot_every: None,
            restore_path: None,
            realtime: false,
        }
    }
}

/// Counters reported after a run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunSummary {
    pub samples_in: u64,
    pub samples_rejected: u64,
    pub anomalies: u64,
    /// Learns that happened only because the adaptation condition fired.
    pub adaptations: u64,
    pub wall_time: std::time::Duration,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "samples_in={} samples_rejected={} anomalies={} adaptations={} wall_time={:.3}s",
            self.samples_in,
            self.samples_rejected,
            self.anomalies,
            self.adaptations,
            self.wall_time.as_secs_f64()
        )
    }
}

struct RunState<'a, W: Write> {
    config: &'a RunConfig,
    out: W,
    detectors: BTreeMap<String, Detector>,
    last_seen: BTreeMap<String, Timestamp>,
    last_global: Option<Timestamp>,
    summary: RunSummary,
    wrote_header: bool,
}

impl<W: Write> RunState<'_, W> {
    fn write_line(&mut self, line: &str) -> Result<(), RunError> {
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| RunError::Write(e.to_string()))?;
        if self.config.realtime {
            self.out
                .flush()
                .map_err(|e| RunError::Write(e.to_string()))?;
        }
        Ok(())
    }

    fn ensure_header(&mut self) -> Result<(), RunError> {
        if !self.wrote_header {
            self.wrote_header = true;
            if self.config.output_format == OutputFormat::Csv {
                let header = csv_header(self.config.mapping.signal_id_field.is_some());
                self.write_line(&header)?;
            }
        }
        Ok(())
    }

    fn handle(&mut self, parsed: Result<ParsedRecord, Rejection>) -> Result<(), RunError> {
        self.summary.samples_in += 1;
        self.ensure_header()?;
        let record = match parsed.and_then(|rec| self.prescaled(rec)) {
            Ok(record) => record,
            Err(rejection) => {
                self.summary.samples_rejected += 1;
                let line = emit_rejection(&rejection.to_string(), self.config.output_format);
                return self.write_line(&line);
            }
        };

        if self.config.realtime {
            if let Some(previous) = self.last_global {
                let gap = record.sample.timestamp() - previous;
                if gap.is_positive() {
                    std::thread::sleep(std::time::Duration::from_nanos(gap.nanos() as u64));
                }
            }
        }
        self.last_global = Some(record.sample.timestamp());

        let key = record.signal.clone().unwrap_or_default();
        if let Some(&previous) = self.last_seen.get(&key) {
            if record.sample.timestamp() < previous {
                let line = emit_warning(
                    "timestamp regression; treated as the previous timestamp",
                    self.config.output_format,
                );
                self.write_line(&line)?;
            } else {
                self.last_seen
                    .insert(key.clone(), record.sample.timestamp());
            }
        } else {
            self.last_seen
                .insert(key.clone(), record.sample.timestamp());
        }

        let signal = record.signal.as_deref();
        let output = match self.detectors.get_mut(&key) {
            Some(detector) => detector.process(record.sample),
            None => {
                let detector = Detector::new(self.config.detector, record.sample)
                    .map_err(|e| RunError::Startup(e.to_string()))?;
                let output = detector.initial_output();
                self.detectors.insert(key, detector);
                output
            }
        };
        if output.is_anomaly {
            self.summary.anomalies += 1;
        }
        if output.learned && output.score >= self.config.detector.quantile && !output.in_warmup {
            self.summary.adaptations += 1;
        }
        let line = emit_output(&output, self.config.output_format, signal);
        self.write_line(&line)?;
        self.maybe_write_periodic_snapshot()
    }

    fn maybe_write_periodic_snapshot(&mut self) -> Result<(), RunError> {
        let (Some(every), Some(path)) = (self.config.snapshot_every, &self.config.snapshot_path)
        else {
            return Ok(());
        };
        if every > 0 && self.summary.samples_in % every == 0 {
            let doc = render_snapshot_file(&self.detectors, self.config);
            std::fs::write(path, doc)
                .map_err(|e| RunError::Write(format!("cannot write snapshot {path:?}: {e}")))?;
        }
        Ok(())
    }

    fn prescaled(&self, record: ParsedRecord) -> Result<ParsedRecord, Rejection> {
        let Some((a, b)) = self.config.prescale else {
            return Ok(record);
        };
        let scaled = a * record.sample.value() + b;
        let sample = Sample::new(record.sample.timestamp(), scaled)
            .map_err(|_| Rejection::NonFinite("value (after prescale)".into()))?;
        Ok(ParsedRecord {
            sample,
            signal: record.signal,
        })
    }
}

/// Replay `input` through per-signal detectors, writing one record per input
/// record to `output`.
pub fn run_stream<R: Read, W: Write>(
    config: &RunConfig,
    input: R,
    output: W,
) -> Result<RunSummary, RunError> {
    let started = Instant::now();
    config
        .detector
        .validate()
        .map_err(|e| RunError::Startup(e.to_string()))?;
    if let Some((a, b)) = config.prescale {
        if !(a.is_finite() && b.is_finite()) {
            return Err(RunError::Startup(format!(
                "prescale coefficients must be finite, got {a},{b}"
            )));
        }
    }

    let detectors = match &config.restore_path {
        Some(path) => restore_snapshot_file(path, config)?,
        None => BTreeMap::new(),
    };
    let mut state = RunState {
        config,
        out: std::io::BufWriter::new(output),
        detectors,
        last_seen: BTreeMap::new(),
        last_global: None,
        summary: RunSummary::default(),
        wrote_header: false,
    };

    match config.input_format {
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(input);
            let headers = reader
                .headers()
                .map_err(|e| RunError::Startup(format!("cannot read input header: {e}")))?
                .clone();
            let empty_input = headers.is_empty() || (headers.len() == 1 && headers[0].is_empty());
            if !empty_input {
                let parser = RecordParser::for_csv(&config.mapping, &headers)
                    .map_err(|e| RunError::Startup(e.to_string()))?;
                let mut record = csv::StringRecord::new();
                loop {
                    match reader.read_record(&mut record) {
                        Ok(false) => break,
                        Ok(true) => state.handle(parser.parse_csv_record(&record))?,
                        Err(e) => return Err(RunError::Read(e.to_string())),
                    }
                }
            }
        }
        InputFormat::Ndjson => {
            let parser = RecordParser::for_ndjson(&config.mapping);
            for line in BufReader::new(input).lines() {
                let line = line.map_err(|e| RunError::Read(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                state.handle(parser.parse_line(&line))?;
            }
        }
    }

    state
        .out
        .flush()
        .map_err(|e| RunError::Write(e.to_string()))?;

    if let Some(path) = &config.snapshot_path {
        let doc = render_snapshot_file(&state.detectors, config);
        std::fs::write(path, doc)
            .map_err(|e| RunError::Write(format!("cannot write snapshot {path:?}: {e}")))?;
    }

    state.summary.wall_time = started.elapsed();
    Ok(state.summary)
}

/// Single-signal runs persist the bare detector document; multi-signal runs
/// wrap one document per signal id.
fn render_snapshot_file(detectors: &BTreeMap<String, Detector>, config: &RunConfig) -> String {
    if config.mapping.signal_id_field.is_none() {
        return detectors
            .values()
            .next()
            .map(|d| d.snapshot())
            .unwrap_or_else(|| "{}".to_string());
    }
    let entries: Vec<String> = detectors
        .iter()
        .map(|(id, det)| {
            format!(
                "{}:{}",
                serde_json::to_string(id).expect("strings always serialize"),
                det.snapshot()
            )
        })
        .collect();
    format!("{{\"signals\":{{{}}}}}", entries.join(","))
}

fn restore_snapshot_file(
    path: &PathBuf,
    config: &RunConfig,
) -> Result<BTreeMap<String, Detector>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Startup(format!("cannot read snapshot {path:?}: {e}")))?;
    let mut detectors = BTreeMap::new();
    if config.mapping.signal_id_field.is_none() {
        if text.trim() == "{}" {
            return Ok(detectors);
        }
        let detector = Detector::restore(&text, config.detector)
            .map_err(|e| RunError::Startup(e.to_string()))?;
        detectors.insert(String::new(), detector);
        return Ok(detectors);
    }
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| RunError::Startup(e.to_string()))?;
    let signals = doc
        .get("signals")
        .and_then(|v| v.as_object())
        .ok_or_else(|| RunError::Startup("snapshot file lacks a 'signals' object".into()))?;
    for (id, state) in signals {
        let detector = Detector::restore(&state.to_string(), config.detector)
            .map_err(|e| RunError::Startup(format!("signal '{id}': {e}")))?;
        detectors.insert(id.clone(), detector);
    }
    Ok(detectors)
}
