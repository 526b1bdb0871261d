//! Nanosecond-resolution timestamps and durations.
//!
//! Both types are thin wrappers over `i64` nanoseconds so that arithmetic,
//! ordering, and (de)serialization are exact. Durations additionally parse
//! from humane strings such as `7d`, `5h`, `90s`, or `250ms`.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const NANOS_PER_SEC: i64 = 1_000_000_000;
pub const NANOS_PER_MILLI: i64 = 1_000_000;
pub const NANOS_PER_MIN: i64 = 60 * NANOS_PER_SEC;
pub const NANOS_PER_HOUR: i64 = 60 * NANOS_PER_MIN;
pub const NANOS_PER_DAY: i64 = 24 * NANOS_PER_HOUR;

/// Absolute point in time: nanoseconds since the Unix epoch.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const EPOCH: Timestamp = Timestamp(0);

    pub const fn from_nanos(nanos: i64) -> Self {
        Timestamp(nanos)
    }

    pub const fn nanos(self) -> i64 {
        self.0
    }

    pub const fn from_secs(secs: i64) -> Self {
        Timestamp(secs * NANOS_PER_SEC)
    }

    /// Fractional epoch seconds, rounded to the nearest nanosecond.
    pub fn from_secs_f64(secs: f64) -> Self {
        Timestamp((secs * NANOS_PER_SEC as f64).round() as i64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC as f64
    }
}

impl Sub for Timestamp {
    type Output = Duration;

    fn sub(self, rhs: Timestamp) -> Duration {
        Duration(self.0 - rhs.0)
    }
}

impl Add<Duration> for Timestamp {
    type Output = Timestamp;

    fn add(self, rhs: Duration) -> Timestamp {
        Timestamp(self.0 + rhs.0)
    }
}

impl Sub<Duration> for Timestamp {
    type Output = Timestamp;

    fn sub(self, rhs: Duration) -> Timestamp {
        Timestamp(self.0 - rhs.0)
    }
}

/// Signed span of time in nanoseconds.
///
/// Serializes as integer nanoseconds (exact); deserializes from either
/// integer nanoseconds or a suffixed string (`"7d"`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Duration(i64);

impl Duration {
    pub const ZERO: Duration = Duration(0);

    pub const fn from_nanos(nanos: i64) -> Self {
        Duration(nanos)
    }

    pub const fn nanos(self) -> i64 {
        self.0
    }

    pub const fn from_secs(secs: i64) -> Self {
        Duration(secs * NANOS_PER_SEC)
    }

    pub const fn from_millis(millis: i64) -> Self {
        Duration(millis * NANOS_PER_MILLI)
    }

    pub const fn from_mins(mins: i64) -> Self {
        Duration(mins * NANOS_PER_MIN)
    }

    pub const fn from_hours(hours: i64) -> Self {
        Duration(hours * NANOS_PER_HOUR)
    }

    pub const fn from_days(days: i64) -> Self {
        Duration(days * NANOS_PER_DAY)
    }

    pub fn from_secs_f64(secs: f64) -> Self {
        Duration((secs * NANOS_PER_SEC as f64).round() as i64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC as f64
    }

    pub const fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// How many whole multiples of `step` fit into this span.
    pub const fn div_floor(self, step: Duration) -> i64 {
        self.0 / step.0
    }
}

impl Add for Duration {
    type Output = Duration;

    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl Sub for Duration {
    type Output = Duration;

    fn sub(self, rhs: Duration) -> Duration {
        Duration(self.0 - rhs.0)
    }
}

impl std::ops::Mul<i64> for Duration {
    type Output = Duration;

    fn mul(self, rhs: i64) -> Duration {
        Duration(self.0 * rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid duration '{0}': expected a number with a d/h/m/s/ms suffix, e.g. 7d, 5h, 90s")]
pub struct ParseDurationError(String);

impl FromStr for Duration {
    type Err = ParseDurationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "0" {
            return Ok(Duration::ZERO);
        }
        let split = s
            .char_indices()
            .find(|(_, c)| c.is_ascii_alphabetic())
            .map(|(i, _)| i)
            .unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let value: f64 = num.parse().map_err(|_| ParseDurationError(s.to_string()))?;
        if !value.is_finite() {
            return Err(ParseDurationError(s.to_string()));
        }
        let per_unit = match unit {
            "d" => NANOS_PER_DAY,
            "h" => NANOS_PER_HOUR,
            "m" | "min" => NANOS_PER_MIN,
            "s" => NANOS_PER_SEC,
            "ms" => NANOS_PER_MILLI,
            "ns" => 1,
            _ => return Err(ParseDurationError(s.to_string())),
        };
        Ok(Duration((value * per_unit as f64).round() as i64))
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ns = self.0;
        if ns == 0 {
            return write!(f, "0");
        }
        for (per_unit, suffix) in [
            (NANOS_PER_DAY, "d"),
            (NANOS_PER_HOUR, "h"),
            (NANOS_PER_MIN, "m"),
            (NANOS_PER_SEC, "s"),
            (NANOS_PER_MILLI, "ms"),
        ] {
            if ns % per_unit == 0 {
                return write!(f, "{}{}", ns / per_unit, suffix);
            }
        }
        write!(f, "{}ns", ns)
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i64(self.0)
    }
}

struct DurationVisitor;

impl Visitor<'_> for DurationVisitor {
    type Value = Duration;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("integer nanoseconds or a suffixed duration string like \"7d\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Duration, E> {
        Ok(Duration(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Duration, E> {
        i64::try_from(v)
            .map(Duration)
            .map_err(|_| E::custom("duration out of range"))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Duration, E> {
        v.parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(DurationVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_humane_suffixes() {
        assert_eq!("7d".parse::<Duration>().unwrap(), Duration::from_days(7));
        assert_eq!("5h".parse::<Duration>().unwrap(), Duration::from_hours(5));
        assert_eq!("90s".parse::<Duration>().unwrap(), Duration::from_secs(90));
        assert_eq!("30m".parse::<Duration>().unwrap(), Duration::from_mins(30));
        assert_eq!(
            "250ms".parse::<Duration>().unwrap(),
            Duration::from_millis(250)
        );
        assert_eq!(
            "1.5d".parse::<Duration>().unwrap(),
            Duration::from_hours(36)
        );
        assert_eq!("0".parse::<Duration>().unwrap(), Duration::ZERO);
    }

    #[test]
    fn rejects_garbage() {
        assert!("7 fortnights".parse::<Duration>().is_err());
        assert!("".parse::<Duration>().is_err());
        assert!("d7".parse::<Duration>().is_err());
        assert!("nan s".parse::<Duration>().is_err());
    }

    #[test]
    fn display_roundtrips_whole_units() {
        for text in ["7d", "5h", "90s", "3m", "250ms"] {
            let d: Duration = text.parse().unwrap();
            assert_eq!(d.to_string().parse::<Duration>().unwrap(), d);
        }
    }

    #[test]
    fn timestamp_arithmetic() {
        let t = Timestamp::from_secs(100);
        assert_eq!(t + Duration::from_secs(20), Timestamp::from_secs(120));
        assert_eq!(t - Duration::from_secs(20), Timestamp::from_secs(80));
        assert_eq!(Timestamp::from_secs(120) - t, Duration::from_secs(20));
        assert_eq!(Timestamp::from_secs_f64(1.25).nanos(), 1_250_000_000);
    }
}
