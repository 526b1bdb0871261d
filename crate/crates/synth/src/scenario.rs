//! Labeled synthetic stream generation.
//!
//! A [`ScenarioSpec`] describes a baseline signal (level, noise, optional
//! diurnal sinusoid) plus a list of injected events, and generates a
//! deterministic labeled sample sequence for a fixed seed. Labels are ground
//! truth assigned during generation, never inferred from the data.
//!
//! Scenario specs load from TOML; durations accept humane strings (`"7d"`),
//! timestamps RFC 3339 or epoch seconds.

use driftband_core::rolling::Sample;
use driftband_core::time::{Duration, Timestamp};
use driftband_io::{format_float, format_timestamp, parse_timestamp, TimestampFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("events '{0}' and '{1}' overlap contradictorily")]
    ContradictoryOverlap(String, String),
}

fn ser_duration<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&d.to_string())
}

fn ser_opt_duration<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
    match d {
        Some(d) => s.serialize_some(&d.to_string()),
        None => s.serialize_none(),
    }
}

fn ser_timestamp<S: Serializer>(t: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_timestamp(*t))
}

fn de_timestamp<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
    let raw = String::deserialize(d)?;
    parse_timestamp(&raw, TimestampFormat::Auto).map_err(serde::de::Error::custom)
}

/// Baseline process: constant level, Gaussian noise, optional daily cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    pub level: f64,
    pub noise_std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diurnal: Option<Diurnal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diurnal {
    pub amplitude: f64,
    #[serde(serialize_with = "ser_duration")]
    pub period: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Additive excursion for the event length. Labeled anomaly.
    Spike,
    /// Permanent level shift starting at `start`; the first `length` of the
    /// new level is labeled change_point, the rest normal.
    Step,
    /// Sensor frozen at `base(start) + magnitude * noise_std`. Labeled
    /// anomaly. Must not overlap other events.
    FaultStuck,
    /// Additive sinusoid; samples whose excursion reaches 3 noise sigma are
    /// labeled anomaly.
    Oscillation,
    /// Samples removed entirely (packet loss). Must not overlap other
    /// events.
    Dropout,
}

impl EventKind {
    fn is_exclusive(self) -> bool {
        matches!(self, EventKind::FaultStuck | EventKind::Dropout)
    }
}

/// One injected event. `magnitude` is in multiples of the baseline
/// `noise_std`. `period` applies to oscillations only (default: length / 8).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub kind: EventKind,
    #[serde(serialize_with = "ser_duration")]
    pub start: Duration,
    #[serde(serialize_with = "ser_duration")]
    pub length: Duration,
    #[serde(default)]
    pub magnitude: f64,
    #[serde(
        default,
        serialize_with = "ser_opt_duration",
        skip_serializing_if = "Option::is_none"
    )]
    pub period: Option<Duration>,
}

impl EventSpec {
    fn contains(&self, offset: Duration) -> bool {
        offset >= self.start && offset < self.start + self.length
    }

    fn describe(&self) -> String {
        format!("{:?}@{}", self.kind, self.start)
    }
}

/// Full description of a synthetic stream; `seed` fixes it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    #[serde(serialize_with = "ser_duration")]
    pub duration: Duration,
    #[serde(serialize_with = "ser_duration")]
    pub sampling_interval: Duration,
    #[serde(
        default,
        serialize_with = "ser_timestamp",
        deserialize_with = "de_timestamp"
    )]
    pub start_time: Timestamp,
    /// Per-sample probability of random packet loss.
    #[serde(default)]
    pub dropout_probability: f64,
    pub baseline: Baseline,
    #[serde(default)]
    pub events: Vec<EventSpec>,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::Invalid(msg));
        if !self.duration.is_positive() || !self.sampling_interval.is_positive() {
            return fail("duration and sampling_interval must be positive".into());
        }
        if self.sampling_interval > self.duration {
            return fail("sampling_interval exceeds duration".into());
        }
        if !(0.0..1.0).contains(&self.dropout_probability) {
            return fail(format!(
                "dropout_probability must be in [0, 1), got {}",
                self.dropout_probability
            ));
        }
        if !(self.baseline.level.is_finite() && self.baseline.noise_std.is_finite()) {
            return fail("baseline level and noise_std must be finite".into());
        }
        if self.baseline.noise_std < 0.0 {
            return fail("noise_std must be non-negative".into());
        }
        if let Some(diurnal) = &self.baseline.diurnal {
            if !diurnal.amplitude.is_finite() || !diurnal.period.is_positive() {
                return fail("diurnal amplitude must be finite and period positive".into());
            }
        }
        for event in &self.events {
            if !event.magnitude.is_finite() {
                return fail(format!("{}: non-finite magnitude", event.describe()));
            }
            if event.start < Duration::ZERO
                || !event.length.is_positive()
                || event.start + event.length > self.duration
            {
                return fail(format!(
                    "{}: event must lie within the scenario duration",
                    event.describe()
                ));
            }
            if let Some(period) = event.period {
                if !period.is_positive() {
                    return fail(format!("{}: period must be positive", event.describe()));
                }
            }
        }
        // Overriding (stuck) and removing (dropout) events cannot compose
        // with sample-wise modifiers. Steps are baseline shifts and compose
        // with everything; additive events may overlap each other.
        for (i, a) in self.events.iter().enumerate() {
            for b in self.events.iter().skip(i + 1) {
                if a.kind == EventKind::Step || b.kind == EventKind::Step {
                    continue;
                }
                let overlap = a.start < b.start + b.length && b.start < a.start + a.length;
                if overlap && (a.kind.is_exclusive() || b.kind.is_exclusive()) {
                    return Err(ScenarioError::ContradictoryOverlap(
                        a.describe(),
                        b.describe(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Noise-free signal level at `offset`: baseline, diurnal cycle, and any
    /// step shifts in effect.
    fn base_at(&self, offset: Duration) -> f64 {
        let mut base = self.baseline.level;
        if let Some(diurnal) = &self.baseline.diurnal {
            let phase = offset.nanos() as f64 / diurnal.period.nanos() as f64;
            base += diurnal.amplitude * (std::f64::consts::TAU * phase).sin();
        }
        for event in &self.events {
            if event.kind == EventKind::Step && offset >= event.start {
                base += event.magnitude * self.baseline.noise_std;
            }
        }
        base
    }
}

/// Ground-truth classification assigned by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Normal,
    ChangePoint,
    Anomaly,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::ChangePoint => "change_point",
            Label::Anomaly => "anomaly",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "normal" => Some(Label::Normal),
            "change_point" => Some(Label::ChangePoint),
            "anomaly" => Some(Label::Anomaly),
            _ => None,
        }
    }

    pub fn is_event(self) -> bool {
        self != Label::Normal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub sample: Sample,
    pub label: Label,
}

/// Generate the labeled stream. Deterministic for a fixed spec and seed:
/// the per-tick random draws are consumed whether or not the tick survives
/// dropout, so event edits do not perturb unrelated samples.
pub fn generate(spec: &ScenarioSpec) -> Result<Vec<LabeledSample>, ScenarioError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit_normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let noise_std = spec.baseline.noise_std;
    let ticks = spec.duration.div_floor(spec.sampling_interval);
    let mut out = Vec::with_capacity(ticks as usize);

    for k in 0..ticks {
        let offset = spec.sampling_interval * k;
        let dropout_draw: f64 = rng.random();
        let noise_draw: f64 = unit_normal.sample(&mut rng);

        if spec
            .events
            .iter()
            .any(|e| e.kind == EventKind::Dropout && e.contains(offset))
        {
            continue;
        }
        if spec.dropout_probability > 0.0 && dropout_draw < spec.dropout_probability {
            continue;
        }

        let mut value = spec.base_at(offset) + noise_std * noise_draw;
        let mut label = Label::Normal;
        for event in &spec.events {
            if !event.contains(offset) {
                continue;
            }
            match event.kind {
                EventKind::Step => label = label.max(Label::ChangePoint),
                EventKind::Spike => {
                    value += event.magnitude * noise_std;
                    label = Label::Anomaly;
                }
                EventKind::Oscillation => {
                    let period = event
                        .period
                        .unwrap_or(Duration::from_nanos(event.length.nanos() / 8));
                    let phase = (offset - event.start).nanos() as f64 / period.nanos() as f64;
                    let delta = event.magnitude * noise_std * (std::f64::consts::TAU * phase).sin();
                    value += delta;
                    if delta.abs() >= 3.0 * noise_std {
                        label = Label::Anomaly;
                    }
                }
                EventKind::FaultStuck => {
                    value = spec.base_at(event.start) + event.magnitude * noise_std;
                    label = Label::Anomaly;
                }
                EventKind::Dropout => unreachable!("dropout ticks were skipped above"),
            }
        }

        let timestamp = spec.start_time + offset;
        let sample = Sample::new(timestamp, value)
            .map_err(|e| ScenarioError::Invalid(format!("generated non-finite value: {e}")))?;
        out.push(LabeledSample { sample, label });
    }
    Ok(out)
}

/// Write `timestamp,value,label` CSV (the detect subcommand reads this
/// directly; the label column rides along for evaluation).
pub fn write_labeled_csv<W: std::io::Write>(
    samples: &[LabeledSample],
    mut writer: W,
) -> std::io::Result<()> {
    writeln!(writer, "timestamp,value,label")?;
    for labeled in samples {
        writeln!(
            writer,
            "{},{},{}",
            format_timestamp(labeled.sample.timestamp()),
            format_float(labeled.sample.value()),
            labeled.label.as_str()
        )?;
    }
    Ok(())
}
