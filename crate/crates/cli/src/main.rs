//! `driftband` — streaming anomaly detection with dynamic process limits.
//!
//! Subcommands: `detect` replays a CSV/NDJSON stream through per-signal
//! detectors; `synth` generates a labeled synthetic stream from a scenario
//! file; `eval` scores detections against labels; `case-study` reproduces
//! the built-in BESS/inverter profiles.
//!
//! Exit status: 0 success, 1 startup/config error, 2 I/O failure
//! mid-stream.

use std::fs::File;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use driftband_core::detector::{DetectionOutput, DetectorConfig, ProcessLimits};
use driftband_core::rolling::Sample;
use driftband_core::time::Duration;
use driftband_io::{
    parse_timestamp, InputFormat, OutputFormat, RecordMapping, RunConfig, RunError, TimestampFormat,
};
use driftband_synth::{
    case_study, evaluate, generate, write_labeled_csv, CaseStudyProfile, Label, LabeledSample,
    ScenarioSpec,
};

#[derive(Parser)]
#[command(
    name = "driftband",
    version,
    about = "Streaming anomaly detection with dynamic process limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a stream through online detectors, one verdict per record.
    Detect(DetectArgs),
    /// Generate a labeled synthetic stream from a scenario TOML file.
    Synth(SynthArgs),
    /// Score a detection run against generator labels.
    Eval(EvalArgs),
    /// Run a built-in case-study profile and write its artifacts.
    CaseStudy(CaseStudyArgs),
}

#[derive(Args)]
struct DetectArgs {
    /// Input path, or '-' for stdin.
    #[arg(long)]
    input: String,
    /// Input format.
    #[arg(long)]
    format: InputFormat,
    /// Name of the timestamp field (ISO-8601 or epoch seconds).
    #[arg(long)]
    timestamp_field: String,
    /// Name of the measurement field.
    #[arg(long)]
    value_field: String,
    /// Field naming the signal; fans out one detector per signal id.
    #[arg(long)]
    signal_field: Option<String>,
    /// Expiration period t_e (e.g. 7d): learned samples are forgotten.
    #[arg(long)]
    t_e: Duration,
    /// Time constant t_c (e.g. 5h): score window for change-point adaptation.
    #[arg(long)]
    t_c: Duration,
    /// Score threshold quantile.
    #[arg(long, default_value_t = DetectorConfig::DEFAULT_QUANTILE)]
    q: f64,
    /// Grace period: flags are suppressed and everything is learned.
    #[arg(long, default_value = "1d")]
    warmup: Duration,
    /// Write a final state snapshot here.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Resume from a snapshot (requires the same detector flags).
    #[arg(long)]
    restore: Option<PathBuf>,
    /// Output path, or '-' for stdout.
    #[arg(long, default_value = "-")]
    output: String,
    /// Output format; defaults to the input format.
    #[arg(long)]
    output_format: Option<OutputFormat>,
    /// Sleep to match inter-arrival gaps instead of replaying at full speed.
    #[arg(long)]
    realtime: bool,
    /// Affine pre-scale "A,B": value <- A*value + B.
    #[arg(long)]
    prescale: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario TOML file.
    #[arg(long)]
    spec: PathBuf,
    /// Labeled CSV output path, or '-' for stdout.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct EvalArgs {
    /// Detection CSV produced by `detect` (CSV output format).
    #[arg(long)]
    detections: PathBuf,
    /// Labeled CSV produced by `synth`.
    #[arg(long)]
    labels: PathBuf,
    /// A flag within this window of a labeled sample counts as a detection.
    #[arg(long, default_value = "5m")]
    match_window: Duration,
}

#[derive(Args)]
struct CaseStudyArgs {
    /// Which case study to reproduce.
    #[arg(long)]
    profile: CaseStudyProfile,
    /// Directory for the generated artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Error carrying its process exit status.
struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    fn startup(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 1,
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Detect(args) => detect(args),
        Command::Synth(args) => synth(args),
        Command::Eval(args) => eval(args),
        Command::CaseStudy(args) => run_case_study(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn open_input(path: &str) -> Result<Box<dyn Read>, CliError> {
    if path == "-" {
        Ok(Box::new(std::io::stdin().lock()))
    } else {
        File::open(path)
            .map(|f| Box::new(f) as Box<dyn Read>)
            .map_err(|e| CliError::startup(format!("cannot open input '{path}': {e}")))
    }
}

fn open_output(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        Ok(Box::new(std::io::stdout().lock()))
    } else {
        File::create(path)
            .map(|f| Box::new(f) as Box<dyn Write>)
            .map_err(|e| CliError::startup(format!("cannot open output '{path}': {e}")))
    }
}

fn detect(args: DetectArgs) -> Result<(), CliError> {
    let detector = DetectorConfig::new(args.t_e, args.t_c)
        .and_then(|c| c.with_quantile(args.q))
        .and_then(|c| c.with_warmup(args.warmup))
        .map_err(|e| CliError::startup(e.to_string()))?;

    let mut mapping = RecordMapping::new(args.timestamp_field, args.value_field)
        .with_timestamp_format(TimestampFormat::Auto);
    if let Some(field) = args.signal_field {
        mapping = mapping.with_signal_field(field);
    }

    let prescale = match &args.prescale {
        None => None,
        Some(raw) => Some(parse_prescale(raw)?),
    };

    let mut config = RunConfig::new(detector, args.format, mapping);
    if let Some(format) = args.output_format {
        config.output_format = format;
    }
    config.prescale = prescale;
    config.snapshot_path = args.snapshot;
    config.restore_path = args.restore;
    config.realtime = args.realtime;

    let input = open_input(&args.input)?;
    let output = open_output(&args.output)?;
    let summary = driftband_io::run_stream(&config, input, output)?;
    eprintln!("{summary}");
    Ok(())
}

fn parse_prescale(raw: &str) -> Result<(f64, f64), CliError> {
    let invalid = || CliError::startup(format!("invalid --prescale '{raw}': expected A,B"));
    let (a, b) = raw.split_once(',').ok_or_else(invalid)?;
    let a: f64 = a.trim().parse().map_err(|_| invalid())?;
    let b: f64 = b.trim().parse().map_err(|_| invalid())?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid());
    }
    Ok((a, b))
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::startup(format!("cannot read scenario {:?}: {e}", args.spec)))?;
    let spec = ScenarioSpec::from_toml(&text).map_err(|e| CliError::startup(e.to_string()))?;
    let labeled = generate(&spec).map_err(|e| CliError::startup(e.to_string()))?;
    let out = open_output(&args.out)?;
    write_labeled_csv(&labeled, out).map_err(|e| CliError::io(e.to_string()))?;
    eprintln!("generated {} samples", labeled.len());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let outputs = read_detections(&args.detections)?;
    let labels = read_labels(&args.labels)?;
    let metrics = evaluate(&outputs, &labels, args.match_window)
        .map_err(|e| CliError::startup(e.to_string()))?;
    println!("{}", case_study::render_metrics(&metrics));
    Ok(())
}

fn run_case_study(args: CaseStudyArgs) -> Result<(), CliError> {
    let (outcome, files) = driftband_synth::replicate_case_study(args.profile, &args.out_dir)
        .map_err(|e| CliError::io(e.to_string()))?;
    eprintln!(
        "wrote {:?}, {:?}, {:?}, {:?}",
        files.stream_csv, files.detections_csv, files.metrics_json, files.scenario_toml
    );
    println!("{}", case_study::render_metrics(&outcome.metrics));
    Ok(())
}

fn read_detections(path: &PathBuf) -> Result<Vec<DetectionOutput>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::startup(format!("cannot open detections {path:?}: {e}")))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::startup(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::startup(format!("detections file lacks a '{name}' column")))
    };
    let (ts_i, value_i, score_i) = (col("timestamp")?, col("value")?, col("score")?);
    let (anom_i, lower_i, upper_i) = (col("is_anomaly")?, col("lower")?, col("upper")?);
    let (learned_i, warmup_i) = (col("learned")?, col("in_warmup")?);

    let mut outputs = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(e.to_string()))?;
        let field = |idx: usize| -> Result<&str, CliError> {
            record
                .get(idx)
                .ok_or_else(|| CliError::startup(format!("short record on line {}", line + 2)))
        };
        let parse_f64 = |raw: &str| -> Result<f64, CliError> {
            raw.parse()
                .map_err(|_| CliError::startup(format!("bad number '{raw}' on line {}", line + 2)))
        };
        let parse_bool = |raw: &str| -> Result<bool, CliError> {
            raw.parse()
                .map_err(|_| CliError::startup(format!("bad bool '{raw}' on line {}", line + 2)))
        };
        let timestamp = parse_timestamp(field(ts_i)?, TimestampFormat::Auto)
            .map_err(|e| CliError::startup(e.to_string()))?;
        outputs.push(DetectionOutput {
            timestamp,
            value: parse_f64(field(value_i)?)?,
            score: parse_f64(field(score_i)?)?,
            is_anomaly: parse_bool(field(anom_i)?)?,
            in_warmup: parse_bool(field(warmup_i)?)?,
            learned: parse_bool(field(learned_i)?)?,
            limits: ProcessLimits {
                lower: parse_f64(field(lower_i)?)?,
                upper: parse_f64(field(upper_i)?)?,
            },
        });
    }
    Ok(outputs)
}

fn read_labels(path: &PathBuf) -> Result<Vec<LabeledSample>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::startup(format!("cannot open labels {path:?}: {e}")))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::startup(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::startup(format!("labels file lacks a '{name}' column")))
    };
    let (ts_i, value_i, label_i) = (col("timestamp")?, col("value")?, col("label")?);

    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(e.to_string()))?;
        let get = |idx: usize| -> Result<&str, CliError> {
            record
                .get(idx)
                .ok_or_else(|| CliError::startup(format!("short record on line {}", line + 2)))
        };
        let timestamp = parse_timestamp(get(ts_i)?, TimestampFormat::Auto)
            .map_err(|e| CliError::startup(e.to_string()))?;
        let value: f64 = get(value_i)?
            .parse()
            .map_err(|_| CliError::startup(format!("bad value on line {}", line + 2)))?;
        let label = Label::parse(get(label_i)?)
            .ok_or_else(|| CliError::startup(format!("bad label on line {}", line + 2)))?;
        let sample = Sample::new(timestamp, value)
            .map_err(|e| CliError::startup(format!("line {}: {e}", line + 2)))?;
        labels.push(LabeledSample { sample, label });
    }
    Ok(labels)
}
