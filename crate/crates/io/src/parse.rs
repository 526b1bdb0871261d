//! Record parsing: one input line (CSV or NDJSON) to one timestamped sample.
//!
//! Parse failures are structured [`Rejection`]s, never stream aborts: the
//! runner emits a rejection record and keeps going, and rejected records
//! never touch detector state.

use chrono::{DateTime, NaiveDateTime};
use driftband_core::rolling::Sample;
use driftband_core::time::Timestamp;
use thiserror::Error;

use crate::mapping::{InputFormat, RecordMapping, TimestampFormat};

/// Why a record could not become a sample.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("missing field '{0}'")]
    MissingField(String),
    #[error("field '{field}' is not numeric: '{raw}'")]
    NonNumeric { field: String, raw: String },
    #[error("non-finite value in field '{0}'")]
    NonFinite(String),
    #[error("unparseable timestamp '{0}'")]
    BadTimestamp(String),
    #[error("malformed record: {0}")]
    Malformed(String),
}

/// A mapping bound to concrete CSV column indices.
#[derive(Debug, Clone)]
pub struct CsvLayout {
    timestamp_idx: usize,
    value_idx: usize,
    signal_idx: Option<usize>,
    timestamp_format: TimestampFormat,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column '{0}' not found in the input header")]
pub struct MissingColumn(pub String);

impl CsvLayout {
    /// Resolve the mapping's field names against a header record.
    pub fn resolve(
        mapping: &RecordMapping,
        header: &csv::StringRecord,
    ) -> Result<Self, MissingColumn> {
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| MissingColumn(name.to_string()))
        };
        Ok(CsvLayout {
            timestamp_idx: find(&mapping.timestamp_field)?,
            value_idx: find(&mapping.value_field)?,
            signal_idx: match &mapping.signal_id_field {
                Some(field) => Some(find(field)?),
                None => None,
            },
            timestamp_format: mapping.timestamp_format,
        })
    }
}

/// One successfully parsed record.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRecord {
    pub sample: Sample,
    pub signal: Option<String>,
}

pub fn parse_timestamp(raw: &str, format: TimestampFormat) -> Result<Timestamp, Rejection> {
    let raw = raw.trim();
    let epoch = |raw: &str| {
        raw.parse::<f64>()
            .ok()
            .filter(|secs| secs.is_finite())
            .map(Timestamp::from_secs_f64)
    };
    let iso = |raw: &str| {
        DateTime::parse_from_rfc3339(raw)
            .ok()
            .and_then(|dt| dt.timestamp_nanos_opt())
            .or_else(|| {
                // Naive date-times are taken as UTC.
                ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
                    .iter()
                    .find_map(|pattern| NaiveDateTime::parse_from_str(raw, pattern).ok())
                    .and_then(|dt| dt.and_utc().timestamp_nanos_opt())
            })
            .map(Timestamp::from_nanos)
    };
    match format {
        TimestampFormat::EpochSeconds => epoch(raw),
        TimestampFormat::Iso8601 => iso(raw),
        TimestampFormat::Auto => epoch(raw).or_else(|| iso(raw)),
    }
    .ok_or_else(|| Rejection::BadTimestamp(raw.to_string()))
}

fn parse_value(raw: &str, field: &str) -> Result<f64, Rejection> {
    let value: f64 = raw.trim().parse().map_err(|_| Rejection::NonNumeric {
        field: field.to_string(),
        raw: raw.to_string(),
    })?;
    if !value.is_finite() {
        return Err(Rejection::NonFinite(field.to_string()));
    }
    Ok(value)
}

/// Line parser for one configured input stream.
#[derive(Debug, Clone)]
pub enum RecordParser {
    Csv(CsvLayout),
    Ndjson(RecordMapping),
}

impl RecordParser {
    pub fn for_csv(
        mapping: &RecordMapping,
        header: &csv::StringRecord,
    ) -> Result<Self, MissingColumn> {
        Ok(RecordParser::Csv(CsvLayout::resolve(mapping, header)?))
    }

    pub fn for_ndjson(mapping: &RecordMapping) -> Self {
        RecordParser::Ndjson(mapping.clone())
    }

    pub fn format(&self) -> InputFormat {
        match self {
            RecordParser::Csv(_) => InputFormat::Csv,
            RecordParser::Ndjson(_) => InputFormat::Ndjson,
        }
    }

    /// Parse a single input line.
    pub fn parse_line(&self, line: &str) -> Result<ParsedRecord, Rejection> {
        match self {
            RecordParser::Csv(layout) => {
                let mut reader = csv::ReaderBuilder::new()
                    .has_headers(false)
                    .flexible(true)
                    .from_reader(line.as_bytes());
                let mut record = csv::StringRecord::new();
                match reader.read_record(&mut record) {
                    Ok(true) => parse_csv_record(&record, layout),
                    Ok(false) => Err(Rejection::Malformed("empty record".into())),
                    Err(e) => Err(Rejection::Malformed(e.to_string())),
                }
            }
            RecordParser::Ndjson(mapping) => parse_ndjson_line(line, mapping),
        }
    }

    /// Fast path for records already split by a streaming CSV reader.
    pub fn parse_csv_record(&self, record: &csv::StringRecord) -> Result<ParsedRecord, Rejection> {
        match self {
            RecordParser::Csv(layout) => parse_csv_record(record, layout),
            RecordParser::Ndjson(_) => Err(Rejection::Malformed(
                "CSV record handed to an NDJSON parser".into(),
            )),
        }
    }
}

fn parse_csv_record(
    record: &csv::StringRecord,
    layout: &CsvLayout,
) -> Result<ParsedRecord, Rejection> {
    let field = |idx: usize, name: &str| {
        record
            .get(idx)
            .ok_or_else(|| Rejection::MissingField(name.to_string()))
    };
    let raw_ts = field(layout.timestamp_idx, "timestamp")?;
    let raw_value = field(layout.value_idx, "value")?;
    let signal = match layout.signal_idx {
        Some(idx) => Some(field(idx, "signal")?.to_string()),
        None => None,
    };
    let timestamp = parse_timestamp(raw_ts, layout.timestamp_format)?;
    let value = parse_value(raw_value, "value")?;
    let sample = Sample::new(timestamp, value).map_err(|_| Rejection::NonFinite("value".into()))?;
    Ok(ParsedRecord { sample, signal })
}

fn parse_ndjson_line(line: &str, mapping: &RecordMapping) -> Result<ParsedRecord, Rejection> {
    let doc: serde_json::Value =
        serde_json::from_str(line).map_err(|e| Rejection::Malformed(e.to_string()))?;
    let object = doc
        .as_object()
        .ok_or_else(|| Rejection::Malformed("record is not a JSON object".into()))?;

    let raw_ts = object
        .get(&mapping.timestamp_field)
        .ok_or_else(|| Rejection::MissingField(mapping.timestamp_field.clone()))?;
    let timestamp = match raw_ts {
        serde_json::Value::Number(n) => {
            let secs = n
                .as_f64()
                .filter(|s| s.is_finite())
                .ok_or_else(|| Rejection::BadTimestamp(n.to_string()))?;
            match mapping.timestamp_format {
                TimestampFormat::Iso8601 => return Err(Rejection::BadTimestamp(n.to_string())),
                _ => Timestamp::from_secs_f64(secs),
            }
        }
        serde_json::Value::String(s) => parse_timestamp(s, mapping.timestamp_format)?,
        other => return Err(Rejection::BadTimestamp(other.to_string())),
    };

    let raw_value = object
        .get(&mapping.value_field)
        .ok_or_else(|| Rejection::MissingField(mapping.value_field.clone()))?;
    let value = match raw_value {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| Rejection::NonNumeric {
            field: mapping.value_field.clone(),
            raw: n.to_string(),
        })?,
        serde_json::Value::String(s) => parse_value(s, &mapping.value_field)?,
        other => {
            return Err(Rejection::NonNumeric {
                field: mapping.value_field.clone(),
                raw: other.to_string(),
            })
        }
    };

    let signal = match &mapping.signal_id_field {
        Some(field) => match object.get(field) {
            Some(serde_json::Value::String(s)) => Some(s.clone()),
            Some(other) => Some(other.to_string()),
            None => return Err(Rejection::MissingField(field.clone())),
        },
        None => None,
    };

    let sample = Sample::new(timestamp, value)
        .map_err(|_| Rejection::NonFinite(mapping.value_field.clone()))?;
    Ok(ParsedRecord { sample, signal })
}
