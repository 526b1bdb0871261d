//! Run scenarios through detectors and evaluate, singly or in batches.
//!
//! Batch sweeps are data-parallel under the `parallel` feature (enabled by
//! default); `run_scenarios_sequential` is the reference lane.

use driftband_core::batch::replay;
use driftband_core::detector::{DetectionOutput, DetectorConfig, DetectorError};
use driftband_core::rolling::Sample;
use driftband_core::time::Duration;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::eval::{evaluate, EvalError, Metrics};
use crate::scenario::{generate, LabeledSample, ScenarioError, ScenarioSpec};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything produced by one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub labeled: Vec<LabeledSample>,
    pub outputs: Vec<DetectionOutput>,
    pub metrics: Metrics,
}

/// Generate the scenario, replay it through a fresh detector, evaluate.
pub fn run_scenario(
    spec: &ScenarioSpec,
    config: DetectorConfig,
    match_window: Duration,
) -> Result<ScenarioOutcome, SynthError> {
    let labeled = generate(spec)?;
    let samples: Vec<Sample> = labeled.iter().map(|l| l.sample).collect();
    let replayed = replay(config, &samples)?;
    let metrics = evaluate(&replayed.outputs, &labeled, match_window)?;
    Ok(ScenarioOutcome {
        labeled,
        outputs: replayed.outputs,
        metrics,
    })
}

/// Run every `(spec, config)` pair, in parallel when the `parallel` feature
/// is enabled.
#[cfg(feature = "parallel")]
pub fn run_scenarios(
    runs: &[(ScenarioSpec, DetectorConfig)],
    match_window: Duration,
) -> Vec<Result<ScenarioOutcome, SynthError>> {
    runs.par_iter()
        .map(|(spec, config)| run_scenario(spec, *config, match_window))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_scenarios(
    runs: &[(ScenarioSpec, DetectorConfig)],
    match_window: Duration,
) -> Vec<Result<ScenarioOutcome, SynthError>> {
    run_scenarios_sequential(runs, match_window)
}

/// Sequential reference lane for benchmarking against `run_scenarios`.
pub fn run_scenarios_sequential(
    runs: &[(ScenarioSpec, DetectorConfig)],
    match_window: Duration,
) -> Vec<Result<ScenarioOutcome, SynthError>> {
    runs.iter()
        .map(|(spec, config)| run_scenario(spec, *config, match_window))
        .collect()
}
