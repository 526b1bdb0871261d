//! Stream ingestion and emission for the driftband detector.
//!
//! Reads CSV (with header) or NDJSON records, maps named fields to
//! timestamped samples, fans multi-signal streams out to independent
//! detectors, and writes one verdict (or structured rejection) per input
//! record in input order. The timestamp clock is the records' own; an
//! optional realtime mode sleeps to match inter-arrival gaps.

pub mod emit;
pub mod mapping;
pub mod parse;
pub mod run;

pub use emit::{
    csv_header, emit_output, emit_rejection, emit_warning, format_float, format_timestamp,
};
pub use mapping::{InputFormat, OutputFormat, RecordMapping, TimestampFormat};
pub use parse::{parse_timestamp, CsvLayout, ParsedRecord, RecordParser, Rejection};
pub use run::{run_stream, RunConfig, RunError, RunSummary};
