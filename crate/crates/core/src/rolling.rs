//! Numerically stable running mean and variance with time-based expiration.
//!
//! [`RunningGaussian`] maintains the sample count, running mean, and corrected
//! sum of squares in one pass. Old samples are removed in a second pass over a
//! bounded [`TimedBuffer`]: `revert` subtracts a sample's contribution using
//! the inverse of the one-pass update, so the statistics track a sliding
//! time window without storing the full stream.

use std::collections::VecDeque;

use thiserror::Error;

use crate::time::{Duration, Timestamp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("non-finite sample value: {0}")]
    NonFinite(f64),
    #[error("cannot revert a sample from count {0}; at least 3 samples are required")]
    RevertUnderflow(u64),
    #[error("invalid statistics state: {0}")]
    InvalidState(String),
}

/// One-pass Gaussian model state: count `n`, running mean, and corrected sum
/// of squares `S`.
///
/// `variance()` reports `S / (n - 1)` once two samples are seen; a fresh
/// model reports the initialization variance of 1, and results never drop
/// below the configured floor so standard scores stay finite on constant
/// streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningGaussian {
    count: u64,
    mean: f64,
    sum_sq: f64,
    variance_floor: f64,
}

impl RunningGaussian {
    pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-12;

    /// Seed the model with its first sample: count 1, mean `x0`, `S = 0`.
    pub fn init(x0: f64) -> Result<Self, StatsError> {
        Self::init_with_floor(x0, Self::DEFAULT_VARIANCE_FLOOR)
    }

    pub fn init_with_floor(x0: f64, variance_floor: f64) -> Result<Self, StatsError> {
        if !x0.is_finite() {
            return Err(StatsError::NonFinite(x0));
        }
        if !(variance_floor.is_finite() && variance_floor > 0.0) {
            return Err(StatsError::InvalidState(format!(
                "variance floor must be positive and finite, got {variance_floor}"
            )));
        }
        Ok(RunningGaussian {
            count: 1,
            mean: x0,
            sum_sq: 0.0,
            variance_floor,
        })
    }

    /// Rebuild a model from persisted parts.
    pub fn from_parts(
        count: u64,
        mean: f64,
        sum_sq: f64,
        variance_floor: f64,
    ) -> Result<Self, StatsError> {
        if count < 1 {
            return Err(StatsError::InvalidState(format!(
                "count must be at least 1, got {count}"
            )));
        }
        if !mean.is_finite() {
            return Err(StatsError::InvalidState(format!("non-finite mean {mean}")));
        }
        if !(sum_sq.is_finite() && sum_sq >= 0.0) {
            return Err(StatsError::InvalidState(format!(
                "sum of squares must be finite and non-negative, got {sum_sq}"
            )));
        }
        let seeded = Self::init_with_floor(mean, variance_floor)?;
        Ok(RunningGaussian {
            count,
            mean,
            sum_sq,
            ..seeded
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    pub fn variance_floor(&self) -> f64 {
        self.variance_floor
    }

    /// Sample variance `S / (n - 1)`, or 1 before the second sample, floored.
    pub fn variance(&self) -> f64 {
        let raw = if self.count >= 2 {
            self.sum_sq / (self.count - 1) as f64
        } else {
            1.0
        };
        raw.max(self.variance_floor)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Learn one sample:
    /// `mean' = mean + (x - mean)/n'` and `S' = S + (x - mean)(x - mean')`.
    pub fn update(&mut self, x: f64) {
        debug_assert!(x.is_finite(), "non-finite values must be rejected upstream");
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.sum_sq += delta * (x - self.mean);
        if self.sum_sq < 0.0 {
            self.sum_sq = 0.0;
        }
    }

    /// Forget one previously learned sample:
    /// `mean' = mean - (x - mean)/n'` and `S' = S - (x - mean')(x - mean)`.
    ///
    /// Refused below count 3 so the reverted state keeps a defined sample
    /// variance; callers skip expiration until more samples arrive.
    pub fn revert(&mut self, x_old: f64) -> Result<(), StatsError> {
        if self.count < 3 {
            return Err(StatsError::RevertUnderflow(self.count));
        }
        debug_assert!(x_old.is_finite());
        self.count -= 1;
        let new_mean = self.mean - (x_old - self.mean) / self.count as f64;
        self.sum_sq -= (x_old - new_mean) * (x_old - self.mean);
        self.mean = new_mean;
        if self.sum_sq < 0.0 {
            self.sum_sq = 0.0;
        }
        Ok(())
    }
}

/// A timestamped measurement. Construction rejects non-finite values, so the
/// rest of the pipeline can assume finiteness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    timestamp: Timestamp,
    value: f64,
}

impl Sample {
    pub fn new(timestamp: Timestamp, value: f64) -> Result<Self, StatsError> {
        if !value.is_finite() {
            return Err(StatsError::NonFinite(value));
        }
        Ok(Sample { timestamp, value })
    }

    pub fn timestamp(&self) -> Timestamp {
        self.timestamp
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub(crate) fn with_timestamp(self, timestamp: Timestamp) -> Self {
        Sample { timestamp, ..self }
    }
}

/// Bounded window of learned samples awaiting expiration, ordered oldest
/// first by timestamp.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimedBuffer {
    entries: VecDeque<Sample>,
    max_age: Duration,
}

impl TimedBuffer {
    pub fn new(max_age: Duration) -> Self {
        TimedBuffer {
            entries: VecDeque::new(),
            max_age,
        }
    }

    pub fn max_age(&self) -> Duration {
        self.max_age
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.entries.iter()
    }

    pub fn push(&mut self, sample: Sample) {
        debug_assert!(
            self.entries
                .back()
                .is_none_or(|last| last.timestamp() <= sample.timestamp()),
            "buffer timestamps must be non-decreasing"
        );
        self.entries.push_back(sample);
    }

    /// Remove every entry with `timestamp <= now - max_age`, reverting each
    /// from `stats` oldest first. Stops early (leaving expired entries in
    /// place) once a revert would drop the count below 2.
    ///
    /// Returns the removed samples so a mirrored model can replay them.
    pub fn expire(&mut self, stats: &mut RunningGaussian, now: Timestamp) -> Vec<Sample> {
        let cutoff = now - self.max_age;
        let mut removed = Vec::new();
        while let Some(front) = self.entries.front() {
            if front.timestamp() > cutoff || stats.count() < 3 {
                break;
            }
            let sample = self.entries.pop_front().expect("front checked above");
            stats
                .revert(sample.value())
                .expect("revert is guarded by the count check");
            removed.push(sample);
        }
        removed
    }
}
