//! Online anomaly detection with dynamic process limits.
//!
//! One [`Detector`] owns one signal. Each step it scores the incoming sample
//! against the current Gaussian model, publishes the live lower/upper limits
//! (computed before the sample is learned), and then learns the sample only
//! if it is normal, the change-point adaptation condition holds, or the
//! detector is still warming up. Learned samples expire after
//! `expiration_period`, so the model tracks a sliding time window.
//!
//! The lower limit comes from a second model fitted to the negated stream;
//! both models always learn and forget the same samples.

use std::collections::VecDeque;

use thiserror::Error;

use crate::gaussian::{cdf, ppf_std, GaussianError, GaussianParams};
use crate::rolling::{RunningGaussian, Sample, StatsError, TimedBuffer};
use crate::time::{Duration, Timestamp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

/// Detector tunables.
///
/// `expiration_period` (t_e) bounds how long a learned sample influences the
/// model; `time_constant` (t_c) is the score window that drives change-point
/// adaptation. Larger t_e relaxes the limits, larger t_c slows adaptation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub expiration_period: Duration,
    pub time_constant: Duration,
    pub quantile: f64,
    pub warmup: Duration,
    pub variance_floor: f64,
}

impl DetectorConfig {
    pub const DEFAULT_QUANTILE: f64 = 0.9973;
    pub const DEFAULT_WARMUP: Duration = Duration::from_days(1);

    pub fn new(
        expiration_period: Duration,
        time_constant: Duration,
    ) -> Result<Self, DetectorError> {
        let config = DetectorConfig {
            expiration_period,
            time_constant,
            quantile: Self::DEFAULT_QUANTILE,
            warmup: Self::DEFAULT_WARMUP,
            variance_floor: RunningGaussian::DEFAULT_VARIANCE_FLOOR,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_quantile(mut self, quantile: f64) -> Result<Self, DetectorError> {
        self.quantile = quantile;
        self.validate()?;
        Ok(self)
    }

    pub fn with_warmup(mut self, warmup: Duration) -> Result<Self, DetectorError> {
        self.warmup = warmup;
        self.validate()?;
        Ok(self)
    }

    pub fn with_variance_floor(mut self, floor: f64) -> Result<Self, DetectorError> {
        self.variance_floor = floor;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if !self.time_constant.is_positive() {
            return Err(DetectorError::InvalidConfig(format!(
                "time constant must be positive, got {}",
                self.time_constant
            )));
        }
        if self.expiration_period <= self.time_constant {
            return Err(DetectorError::InvalidConfig(format!(
                "expiration period ({}) must exceed the time constant ({})",
                self.expiration_period, self.time_constant
            )));
        }
        if !(self.quantile > 0.5 && self.quantile < 1.0) {
            return Err(DetectorError::InvalidConfig(format!(
                "quantile must lie in (0.5, 1), got {}",
                self.quantile
            )));
        }
        if self.warmup < Duration::ZERO {
            return Err(DetectorError::InvalidConfig(format!(
                "warmup must be non-negative, got {}",
                self.warmup
            )));
        }
        if !(self.variance_floor.is_finite() && self.variance_floor > 0.0) {
            return Err(DetectorError::InvalidConfig(format!(
                "variance floor must be positive and finite, got {}",
                self.variance_floor
            )));
        }
        Ok(())
    }
}

/// Live bounds of normal operation. A sample outside `[lower, upper]` is
/// exactly a sample whose anomaly score reaches the configured quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessLimits {
    pub lower: f64,
    pub upper: f64,
}

/// Per-sample verdict. `limits` are the bounds the sample was judged
/// against, i.e. computed before this sample could update the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOutput {
    pub timestamp: Timestamp,
    pub value: f64,
    pub score: f64,
    pub is_anomaly: bool,
    pub in_warmup: bool,
    pub learned: bool,
    pub limits: ProcessLimits,
}

/// Change-point condition: the mean of the windowed scores exceeds the
/// quantile. Requires at least two entries so a single extreme sample
/// cannot count as a sustained shift.
pub fn adaptation_condition(scores: impl IntoIterator<Item = f64>, quantile: f64) -> bool {
    let mut sum = 0.0;
    let mut n = 0u64;
    for y in scores {
        sum += y;
        n += 1;
    }
    n >= 2 && sum / n as f64 > quantile
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    config: DetectorConfig,
    stats: RunningGaussian,
    stats_neg: RunningGaussian,
    buffer: TimedBuffer,
    score_window: VecDeque<(Timestamp, f64)>,
    start_time: Timestamp,
    // ppf_std(q/2 + 1/2), fixed for the life of the detector. The limits are
    // affine in the model parameters, so solving the standard-normal root
    // once is bit-identical to re-running the PPF every step.
    z_upper: f64,
}

impl Detector {
    /// Initialize from the first sample: both models seeded (direct on x0,
    /// mirror on -x0), empty buffer and score window.
    pub fn new(config: DetectorConfig, first: Sample) -> Result<Self, DetectorError> {
        config.validate()?;
        let z_upper = ppf_std(config.quantile / 2.0 + 0.5)?;
        let stats = RunningGaussian::init_with_floor(first.value(), config.variance_floor)?;
        let stats_neg = RunningGaussian::init_with_floor(-first.value(), config.variance_floor)?;
        Ok(Detector {
            buffer: TimedBuffer::new(config.expiration_period),
            score_window: VecDeque::new(),
            start_time: first.timestamp(),
            stats,
            stats_neg,
            z_upper,
            config,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn start_time(&self) -> Timestamp {
        self.start_time
    }

    /// Direct model parameters (mean and floored variance).
    pub fn model_params(&self) -> GaussianParams {
        GaussianParams::new(self.stats.mean(), self.stats.variance())
            .expect("floored variance is positive")
    }

    /// Parameters of the model fitted on the negated stream.
    pub fn mirror_params(&self) -> GaussianParams {
        GaussianParams::new(self.stats_neg.mean(), self.stats_neg.variance())
            .expect("floored variance is positive")
    }

    pub fn stats(&self) -> &RunningGaussian {
        &self.stats
    }

    pub fn stats_mirror(&self) -> &RunningGaussian {
        &self.stats_neg
    }

    pub fn buffer(&self) -> &TimedBuffer {
        &self.buffer
    }

    pub fn score_window_len(&self) -> usize {
        self.score_window.len()
    }

    /// Two-sided anomaly score `y = 2 |F(x) - 1/2|` under the current direct
    /// model. 0 at the mean, approaching 1 in the far tails; `y >= quantile`
    /// classifies as anomalous.
    pub fn score_sample(&self, x: f64) -> f64 {
        2.0 * (cdf(x, &self.model_params()) - 0.5).abs()
    }

    /// Current process limits: upper from the direct model at
    /// `q/2 + 1/2`, lower from the mirrored model, negated back.
    pub fn limits(&self) -> ProcessLimits {
        let upper = self.z_upper * self.stats.std_dev() + self.stats.mean();
        let lower = -(self.z_upper * self.stats_neg.std_dev() + self.stats_neg.mean());
        ProcessLimits { lower, upper }
    }

    pub fn in_warmup(&self, at: Timestamp) -> bool {
        at - self.start_time < self.config.warmup
    }

    /// Whether the scores currently in the window satisfy the adaptation
    /// condition.
    pub fn adaptation_active(&self) -> bool {
        adaptation_condition(
            self.score_window.iter().map(|&(_, y)| y),
            self.config.quantile,
        )
    }

    /// The verdict record for the sample the detector was seeded with;
    /// meaningful immediately after construction.
    pub fn initial_output(&self) -> DetectionOutput {
        DetectionOutput {
            timestamp: self.start_time,
            value: self.stats.mean(),
            score: 0.0,
            is_anomaly: false,
            in_warmup: self.in_warmup(self.start_time),
            learned: true,
            limits: self.limits(),
        }
    }

    /// Process one sample. In order: score it, capture the pre-update
    /// limits, push the score into the adaptation window, then learn the
    /// sample iff it is normal, the adaptation condition holds, or the
    /// detector is warming up. Learning appends to the expiration buffer and
    /// expires anything older than `expiration_period` from both models.
    ///
    /// A timestamp regression is treated as the previous timestamp; the
    /// output record echoes the original.
    pub fn process(&mut self, sample: Sample) -> DetectionOutput {
        let previous = self
            .score_window
            .back()
            .map(|&(t, _)| t)
            .unwrap_or(self.start_time);
        let now = sample.timestamp().max(previous);
        let x = sample.value();

        let score = self.score_sample(x);
        let limits = self.limits();

        self.score_window.push_back((now, score));
        let window_cutoff = now - self.config.time_constant;
        while let Some(&(t, _)) = self.score_window.front() {
            if t > window_cutoff {
                break;
            }
            self.score_window.pop_front();
        }

        let in_warmup = self.in_warmup(now);
        let learned = score < self.config.quantile || self.adaptation_active() || in_warmup;
        if learned {
            self.stats.update(x);
            self.stats_neg.update(-x);
            self.buffer.push(sample.with_timestamp(now));
            let removed = self.buffer.expire(&mut self.stats, now);
            for old in &removed {
                self.stats_neg
                    .revert(-old.value())
                    .expect("mirror count matches the direct model");
            }
        }
        debug_assert_eq!(self.buffer.len() as u64 + 1, self.stats.count());

        DetectionOutput {
            timestamp: sample.timestamp(),
            value: x,
            score,
            is_anomaly: score >= self.config.quantile && !in_warmup,
            in_warmup,
            learned,
            limits,
        }
    }

    pub(crate) fn from_restored_parts(
        config: DetectorConfig,
        stats: RunningGaussian,
        stats_neg: RunningGaussian,
        buffer: TimedBuffer,
        score_window: VecDeque<(Timestamp, f64)>,
        start_time: Timestamp,
    ) -> Result<Self, DetectorError> {
        config.validate()?;
        let z_upper = ppf_std(config.quantile / 2.0 + 0.5)?;
        Ok(Detector {
            config,
            stats,
            stats_neg,
            buffer,
            score_window,
            start_time,
            z_upper,
        })
    }

    pub(crate) fn score_window(&self) -> &VecDeque<(Timestamp, f64)> {
        &self.score_window
    }
}
