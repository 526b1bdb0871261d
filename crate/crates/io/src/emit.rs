//! Output emission: one line per verdict, byte-deterministic.
//!
//! Field order is fixed: `timestamp, value, score, is_anomaly, lower, upper,
//! learned, in_warmup` (with a leading `signal` field on multi-signal
//! streams). Floating-point values print with 9 significant digits;
//! timestamps print as RFC 3339 UTC.

use chrono::{DateTime, SecondsFormat};
use driftband_core::detector::DetectionOutput;
use driftband_core::time::Timestamp;

use crate::mapping::OutputFormat;

/// Format with exactly 9 significant digits, `%g`-style: fixed notation for
/// exponents in [-4, 9), scientific otherwise.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("{:.8e} always contains 'e'");
    let exp: i32 = exp.parse().expect("{:.8e} exponent is an integer");
    if !(-4..9).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    debug_assert_eq!(digits.len(), 9);
    let rendered = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let split = (exp + 1) as usize;
        if split >= digits.len() {
            digits
        } else {
            format!("{}.{}", &digits[..split], &digits[split..])
        }
    };
    format!("{sign}{rendered}")
}

/// RFC 3339 in UTC with minimal subsecond digits.
pub fn format_timestamp(ts: Timestamp) -> String {
    DateTime::from_timestamp_nanos(ts.nanos()).to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Header line for CSV output.
pub fn csv_header(with_signal: bool) -> String {
    let base = "timestamp,value,score,is_anomaly,lower,upper,learned,in_warmup";
    if with_signal {
        format!("signal,{base}")
    } else {
        base.to_string()
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Render one verdict as a single output line (no trailing newline).
pub fn emit_output(out: &DetectionOutput, format: OutputFormat, signal: Option<&str>) -> String {
    let ts = format_timestamp(out.timestamp);
    match format {
        OutputFormat::Csv => {
            let fields = format!(
                "{},{},{},{},{},{},{},{}",
                ts,
                format_float(out.value),
                format_float(out.score),
                out.is_anomaly,
                format_float(out.limits.lower),
                format_float(out.limits.upper),
                out.learned,
                out.in_warmup,
            );
            match signal {
                Some(id) => format!("{},{}", csv_escape(id), fields),
                None => fields,
            }
        }
        OutputFormat::Ndjson => {
            let signal_part = match signal {
                Some(id) => format!(
                    "\"signal\":{},",
                    serde_json::to_string(id).expect("strings always serialize")
                ),
                None => String::new(),
            };
            format!(
                "{{{signal_part}\"timestamp\":\"{}\",\"value\":{},\"score\":{},\"is_anomaly\":{},\"lower\":{},\"upper\":{},\"learned\":{},\"in_warmup\":{}}}",
                ts,
                format_float(out.value),
                format_float(out.score),
                out.is_anomaly,
                format_float(out.limits.lower),
                format_float(out.limits.upper),
                out.learned,
                out.in_warmup,
            )
        }
    }
}

/// Render a rejection as an output record.
pub fn emit_rejection(reason: &str, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => format!("# rejected: {reason}"),
        OutputFormat::Ndjson => format!(
            "{{\"rejected\":{}}}",
            serde_json::to_string(reason).expect("strings always serialize")
        ),
    }
}

/// Render a non-fatal warning (e.g. a timestamp regression) as a record.
pub fn emit_warning(message: &str, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => format!("# warning: {message}"),
        OutputFormat::Ndjson => format!(
            "{{\"warning\":{}}}",
            serde_json::to_string(message).expect("strings always serialize")
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use driftband_core::detector::ProcessLimits;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_float(0.53), "0.530000000");
        assert_eq!(format_float(3.0), "3.00000000");
        assert_eq!(format_float(-0.9986501), "-0.998650100");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(123456789.0), "123456789");
        assert_eq!(format_float(1234567894.0), "1.23456789e9");
        assert_eq!(format_float(0.000123456789), "0.000123456789");
        assert_eq!(format_float(0.0000123456789), "1.23456789e-5");
        assert_eq!(format_float(-42.0), "-42.0000000");
        // Rounding that carries into a new leading digit.
        assert_eq!(format_float(0.99999999996), "1.00000000");
    }

    #[test]
    fn timestamps_render_rfc3339_utc() {
        assert_eq!(
            format_timestamp(Timestamp::from_secs(1646654400)),
            "2022-03-07T12:00:00Z"
        );
        assert_eq!(
            format_timestamp(Timestamp::from_nanos(1_646_654_400_250_000_000)),
            "2022-03-07T12:00:00.250Z"
        );
    }

    fn output() -> DetectionOutput {
        DetectionOutput {
            timestamp: Timestamp::from_secs(1646654400),
            value: 0.53,
            score: 0.25,
            is_anomaly: false,
            in_warmup: true,
            learned: true,
            limits: ProcessLimits {
                lower: -2.5,
                upper: 3.5,
            },
        }
    }

    #[test]
    fn csv_line_has_fixed_field_order() {
        let line = emit_output(&output(), OutputFormat::Csv, None);
        assert_eq!(
            line,
            "2022-03-07T12:00:00Z,0.530000000,0.250000000,false,-2.50000000,3.50000000,true,true"
        );
        let with_signal = emit_output(&output(), OutputFormat::Csv, Some("cell,7"));
        assert!(with_signal.starts_with("\"cell,7\",2022-03-07"));
    }

    #[test]
    fn ndjson_line_is_valid_json_with_same_fields() {
        let line = emit_output(&output(), OutputFormat::Ndjson, Some("s1"));
        let doc: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(doc["signal"], "s1");
        assert_eq!(doc["timestamp"], "2022-03-07T12:00:00Z");
        assert_eq!(doc["value"], 0.53);
        assert_eq!(doc["is_anomaly"], false);
        assert_eq!(doc["lower"], -2.5);
    }

    #[test]
    fn rejection_and_warning_records() {
        assert_eq!(
            emit_rejection("missing field 'value'", OutputFormat::Csv),
            "# rejected: missing field 'value'"
        );
        let json = emit_rejection("bad", OutputFormat::Ndjson);
        assert_eq!(json, r#"{"rejected":"bad"}"#);
        assert!(emit_warning("ts regression", OutputFormat::Csv).starts_with("# warning:"));
    }
}
