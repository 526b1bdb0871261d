//! Versioned snapshot documents for persisting and restoring detector state.
//!
//! A snapshot is a self-describing JSON object with a fixed field set:
//! `schema_version`, `config`, `stats_direct`, `stats_mirror`, `buffer`,
//! `score_window`, `start_time`. Restoring from a snapshot and replaying a
//! stream produces bit-identical outputs to the uninterrupted run.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{Detector, DetectorConfig, DetectorError};
use crate::rolling::{RunningGaussian, Sample, TimedBuffer};
use crate::time::Timestamp;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("malformed snapshot document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported snapshot schema version {found} (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("snapshot config does not match the supplied config ({0})")]
    ConfigMismatch(String),
    #[error("invalid snapshot state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct StatsDoc {
    count: u64,
    mean: f64,
    sum_sq: f64,
}

impl From<&RunningGaussian> for StatsDoc {
    fn from(stats: &RunningGaussian) -> Self {
        StatsDoc {
            count: stats.count(),
            mean: stats.mean(),
            sum_sq: stats.sum_sq(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BufferEntryDoc {
    timestamp: Timestamp,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreEntryDoc {
    timestamp: Timestamp,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotDoc {
    schema_version: u32,
    config: DetectorConfig,
    stats_direct: StatsDoc,
    stats_mirror: StatsDoc,
    buffer: Vec<BufferEntryDoc>,
    score_window: Vec<ScoreEntryDoc>,
    start_time: Timestamp,
}

impl Detector {
    /// Serialize the full state as a one-line JSON document.
    pub fn snapshot(&self) -> String {
        let doc = SnapshotDoc {
            schema_version: SCHEMA_VERSION,
            config: *self.config(),
            stats_direct: StatsDoc::from(self.stats()),
            stats_mirror: StatsDoc::from(self.stats_mirror()),
            buffer: self
                .buffer()
                .iter()
                .map(|s| BufferEntryDoc {
                    timestamp: s.timestamp(),
                    value: s.value(),
                })
                .collect(),
            score_window: self
                .score_window()
                .iter()
                .map(|&(timestamp, score)| ScoreEntryDoc { timestamp, score })
                .collect(),
            start_time: self.start_time(),
        };
        serde_json::to_string(&doc).expect("snapshot serialization cannot fail")
    }

    /// Rebuild a detector from a snapshot document. The supplied config must
    /// equal the one echoed in the document; a silent mismatch would change
    /// behavior mid-stream.
    pub fn restore(doc: &str, config: DetectorConfig) -> Result<Detector, SnapshotError> {
        let value: serde_json::Value = serde_json::from_str(doc)?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| SnapshotError::InvalidState("missing schema_version".into()))?;
        if found != u64::from(SCHEMA_VERSION) {
            return Err(SnapshotError::SchemaMismatch {
                found: found as u32,
                expected: SCHEMA_VERSION,
            });
        }
        let doc: SnapshotDoc = serde_json::from_value(value)?;
        if doc.config != config {
            return Err(SnapshotError::ConfigMismatch(format!(
                "snapshot: {:?}, supplied: {:?}",
                doc.config, config
            )));
        }

        let stats = RunningGaussian::from_parts(
            doc.stats_direct.count,
            doc.stats_direct.mean,
            doc.stats_direct.sum_sq,
            config.variance_floor,
        )
        .map_err(|e| SnapshotError::InvalidState(e.to_string()))?;
        let stats_neg = RunningGaussian::from_parts(
            doc.stats_mirror.count,
            doc.stats_mirror.mean,
            doc.stats_mirror.sum_sq,
            config.variance_floor,
        )
        .map_err(|e| SnapshotError::InvalidState(e.to_string()))?;

        if doc.buffer.len() as u64 + 1 != stats.count() {
            return Err(SnapshotError::InvalidState(format!(
                "buffer length {} inconsistent with sample count {}",
                doc.buffer.len(),
                stats.count()
            )));
        }

        let mut buffer = TimedBuffer::new(config.expiration_period);
        let mut last: Option<Timestamp> = None;
        for entry in &doc.buffer {
            if last.is_some_and(|t| entry.timestamp < t) {
                return Err(SnapshotError::InvalidState(
                    "buffer timestamps are not non-decreasing".into(),
                ));
            }
            last = Some(entry.timestamp);
            let sample = Sample::new(entry.timestamp, entry.value)
                .map_err(|e| SnapshotError::InvalidState(e.to_string()))?;
            buffer.push(sample);
        }

        let score_window: VecDeque<(Timestamp, f64)> = doc
            .score_window
            .iter()
            .map(|e| (e.timestamp, e.score))
            .collect();

        Detector::from_restored_parts(
            config,
            stats,
            stats_neg,
            buffer,
            score_window,
            doc.start_time,
        )
        .map_err(|e: DetectorError| SnapshotError::InvalidState(e.to_string()))
    }
}
