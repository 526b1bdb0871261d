//! Input/output formats and the mapping from record fields to samples.

use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Ndjson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Ndjson,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown format '{0}' (expected csv or ndjson)")]
pub struct ParseFormatError(String);

impl FromStr for InputFormat {
    type Err = ParseFormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "ndjson" => Ok(InputFormat::Ndjson),
            other => Err(ParseFormatError(other.to_string())),
        }
    }
}

impl FromStr for OutputFormat {
    type Err = ParseFormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "ndjson" => Ok(OutputFormat::Ndjson),
            other => Err(ParseFormatError(other.to_string())),
        }
    }
}

/// How timestamps are encoded in the input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TimestampFormat {
    /// Numeric epoch seconds if the field parses as a number, ISO-8601
    /// otherwise.
    #[default]
    Auto,
    Iso8601,
    EpochSeconds,
}

/// Names the input fields that carry the timestamp, the measurement, and
/// (for multi-signal streams) the signal id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordMapping {
    pub timestamp_field: String,
    pub value_field: String,
    pub timestamp_format: TimestampFormat,
    pub signal_id_field: Option<String>,
}

impl RecordMapping {
    pub fn new(timestamp_field: impl Into<String>, value_field: impl Into<String>) -> Self {
        RecordMapping {
            timestamp_field: timestamp_field.into(),
            value_field: value_field.into(),
            timestamp_format: TimestampFormat::Auto,
            signal_id_field: None,
        }
    }

    pub fn with_signal_field(mut self, field: impl Into<String>) -> Self {
        self.signal_id_field = Some(field.into());
        self
    }

    pub fn with_timestamp_format(mut self, format: TimestampFormat) -> Self {
        self.timestamp_format = format;
        self
    }
}
