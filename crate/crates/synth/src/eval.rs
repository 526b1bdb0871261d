//! Score detector output against generator ground truth.
//!
//! A flag within `match_window` of a labeled sample counts as a true
//! positive; an event (maximal run of non-normal labels) counts as detected
//! if any flag falls inside it, widened by the window. Warm-up records are
//! excluded throughout. With zero flags, precision is reported as 1 (the
//! documented no-false-alarms convention); likewise recall with zero labels.

use driftband_core::detector::DetectionOutput;
use driftband_core::time::{Duration, Timestamp};
use serde::Serialize;
use thiserror::Error;

use crate::scenario::{Label, LabeledSample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("sequences differ in length: {outputs} outputs vs {labels} labels")]
    LengthMismatch { outputs: usize, labels: usize },
    #[error("sequences misaligned at index {0}: timestamps differ")]
    Misaligned(usize),
}

fn ser_opt_duration_secs<S: serde::Serializer>(
    d: &Option<Duration>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match d {
        Some(d) => s.serialize_some(&d.as_secs_f64()),
        None => s.serialize_none(),
    }
}

/// Evaluation results. Durations serialize as fractional seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    /// Fraction of labeled events with at least one flagged sample.
    pub event_recall: f64,
    /// Event start to first flag, averaged over detected events.
    #[serde(serialize_with = "ser_opt_duration_secs")]
    pub mean_detection_delay: Option<Duration>,
    /// Change-point start to the first post-step sample that is inside the
    /// limits and not flagged, averaged over change-point events.
    #[serde(serialize_with = "ser_opt_duration_secs")]
    pub adaptation_time: Option<Duration>,
    pub flagged_samples: u64,
    pub labeled_samples: u64,
    pub labeled_events: u64,
}

#[derive(Debug, Clone, Copy)]
struct EventSpan {
    label: Label,
    start: Timestamp,
    end: Timestamp,
}

fn any_within(sorted: &[Timestamp], lo: Timestamp, hi: Timestamp) -> bool {
    let idx = sorted.partition_point(|&t| t < lo);
    sorted.get(idx).is_some_and(|&t| t <= hi)
}

fn first_within(sorted: &[Timestamp], lo: Timestamp, hi: Timestamp) -> Option<Timestamp> {
    let idx = sorted.partition_point(|&t| t < lo);
    sorted.get(idx).copied().filter(|&t| t <= hi)
}

/// Compare aligned output/label sequences.
pub fn evaluate(
    outputs: &[DetectionOutput],
    labels: &[LabeledSample],
    match_window: Duration,
) -> Result<Metrics, EvalError> {
    if outputs.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            outputs: outputs.len(),
            labels: labels.len(),
        });
    }
    for (i, (out, lab)) in outputs.iter().zip(labels).enumerate() {
        if out.timestamp != lab.sample.timestamp() {
            return Err(EvalError::Misaligned(i));
        }
    }

    // Warm-up records take no part in any count.
    let scored: Vec<(&DetectionOutput, &LabeledSample)> = outputs
        .iter()
        .zip(labels)
        .filter(|(out, _)| !out.in_warmup)
        .collect();

    let flagged: Vec<Timestamp> = scored
        .iter()
        .filter(|(out, _)| out.is_anomaly)
        .map(|(out, _)| out.timestamp)
        .collect();
    let labeled: Vec<Timestamp> = scored
        .iter()
        .filter(|(_, lab)| lab.label.is_event())
        .map(|(_, lab)| lab.sample.timestamp())
        .collect();

    let mut events: Vec<EventSpan> = Vec::new();
    for (_, lab) in &scored {
        if !lab.label.is_event() {
            continue;
        }
        let ts = lab.sample.timestamp();
        match events.last_mut() {
            Some(span) if span.label == lab.label && span.end == previous_ts(&scored, ts) => {
                span.end = ts;
            }
            _ => events.push(EventSpan {
                label: lab.label,
                start: ts,
                end: ts,
            }),
        }
    }

    let true_positives = flagged
        .iter()
        .filter(|&&t| any_within(&labeled, t - match_window, t + match_window))
        .count();
    let precision = if flagged.is_empty() {
        1.0
    } else {
        true_positives as f64 / flagged.len() as f64
    };

    let detected_samples = labeled
        .iter()
        .filter(|&&t| any_within(&flagged, t - match_window, t + match_window))
        .count();
    let recall = if labeled.is_empty() {
        1.0
    } else {
        detected_samples as f64 / labeled.len() as f64
    };

    let mut detected_events = 0u64;
    let mut delays: Vec<Duration> = Vec::new();
    for span in &events {
        if let Some(first) =
            first_within(&flagged, span.start - match_window, span.end + match_window)
        {
            detected_events += 1;
            let delay = if first > span.start {
                first - span.start
            } else {
                Duration::ZERO
            };
            delays.push(delay);
        }
    }
    let event_recall = if events.is_empty() {
        1.0
    } else {
        detected_events as f64 / events.len() as f64
    };
    let mean_detection_delay = mean_duration(&delays);

    let mut adaptations: Vec<Duration> = Vec::new();
    for span in events.iter().filter(|s| s.label == Label::ChangePoint) {
        let adapted = scored.iter().find(|(out, _)| {
            out.timestamp >= span.start
                && !out.is_anomaly
                && out.value >= out.limits.lower
                && out.value <= out.limits.upper
        });
        if let Some((out, _)) = adapted {
            adaptations.push(if out.timestamp > span.start {
                out.timestamp - span.start
            } else {
                Duration::ZERO
            });
        }
    }
    let adaptation_time = mean_duration(&adaptations);

    Ok(Metrics {
        precision,
        recall,
        event_recall,
        mean_detection_delay,
        adaptation_time,
        flagged_samples: flagged.len() as u64,
        labeled_samples: labeled.len() as u64,
        labeled_events: events.len() as u64,
    })
}

/// Timestamp of the scored record immediately before `ts`, used to decide
/// whether two labeled samples are consecutive (dropout gaps split events).
fn previous_ts(scored: &[(&DetectionOutput, &LabeledSample)], ts: Timestamp) -> Timestamp {
    let idx = scored.partition_point(|(out, _)| out.timestamp < ts);
    if idx == 0 {
        ts
    } else {
        scored[idx - 1].0.timestamp
    }
}

fn mean_duration(values: &[Duration]) -> Option<Duration> {
    if values.is_empty() {
        return None;
    }
    let total: i64 = values.iter().map(|d| d.nanos()).sum();
    Some(Duration::from_nanos(total / values.len() as i64))
}
