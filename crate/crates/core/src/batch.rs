//! Replay detectors over in-memory streams, one detector per stream.
//!
//! Streams are independent, so batches run data-parallel under the
//! `parallel` feature (the default); without it the same API degrades to a
//! sequential loop. `replay_many_sequential` is always available so the two
//! lanes can be compared directly in benchmarks.

use crate::detector::{DetectionOutput, Detector, DetectorConfig, DetectorError};
use crate::rolling::Sample;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Outcome of replaying one stream: one output per input sample (the first
/// sample seeds the detector and yields its initial record), plus the final
/// detector state.
#[derive(Debug, Clone)]
pub struct Replay {
    pub outputs: Vec<DetectionOutput>,
    pub detector: Detector,
}

/// Drive a fresh detector over `samples` in order.
pub fn replay(config: DetectorConfig, samples: &[Sample]) -> Result<Replay, DetectorError> {
    let (first, rest) = samples
        .split_first()
        .ok_or_else(|| DetectorError::InvalidConfig("empty stream".into()))?;
    let mut detector = Detector::new(config, *first)?;
    let mut outputs = Vec::with_capacity(samples.len());
    outputs.push(detector.initial_output());
    for sample in rest {
        outputs.push(detector.process(*sample));
    }
    Ok(Replay { outputs, detector })
}

/// Replay every `(config, stream)` pair, in parallel when the `parallel`
/// feature is enabled.
#[cfg(feature = "parallel")]
pub fn replay_many(runs: &[(DetectorConfig, Vec<Sample>)]) -> Vec<Result<Replay, DetectorError>> {
    runs.par_iter()
        .map(|(config, samples)| replay(*config, samples))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn replay_many(runs: &[(DetectorConfig, Vec<Sample>)]) -> Vec<Result<Replay, DetectorError>> {
    replay_many_sequential(runs)
}

/// Sequential reference lane for benchmarking against `replay_many`.
pub fn replay_many_sequential(
    runs: &[(DetectorConfig, Vec<Sample>)],
) -> Vec<Result<Replay, DetectorError>> {
    runs.iter()
        .map(|(config, samples)| replay(*config, samples))
        .collect()
}
