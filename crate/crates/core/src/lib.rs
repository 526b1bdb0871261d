//! Streaming univariate anomaly detection with dynamic process limits.
//!
//! The detector fits a rolling Gaussian model online — one-pass updates,
//! two-pass reverts over a time-based expiration window — and inverts the
//! model's CDF each step to publish real-valued lower/upper process limits.
//! Samples outside the three-sigma region are flagged; sustained shifts
//! trigger change-point adaptation so the limits re-center on the new
//! operating level.
//!
//! Modules:
//! - [`rolling`]: Welford-style running mean/variance with time-based
//!   sample expiration.
//! - [`gaussian`]: error function, CDF, and bracketed percent-point
//!   function.
//! - [`detector`]: the per-signal detection state machine.
//! - [`snapshot`]: versioned persistence of detector state.
//! - [`batch`]: multi-stream replay, data-parallel under the `parallel`
//!   feature (enabled by default).

pub mod batch;
pub mod detector;
pub mod gaussian;
pub mod rolling;
pub mod snapshot;
pub mod time;

pub use detector::{
    adaptation_condition, DetectionOutput, Detector, DetectorConfig, DetectorError, ProcessLimits,
};
pub use gaussian::{cdf, erf_approx, ppf, standard_score, Bracket, GaussianError, GaussianParams};
pub use rolling::{RunningGaussian, Sample, StatsError, TimedBuffer};
pub use snapshot::SnapshotError;
pub use time::{Duration, Timestamp};
