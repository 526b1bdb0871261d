//! Synthetic labeled streams and evaluation for the driftband detector.
//!
//! Replaces the proprietary case-study data with deterministic scenarios
//! that reproduce the narrated behaviors (spikes, change points, stuck
//! sensors, packet loss, oscillations), scores detector output against the
//! generator's ground truth, and exports plot-ready CSV.

pub mod case_study;
pub mod eval;
pub mod scenario;
pub mod sweep;

pub use case_study::{
    profile_spec, replicate_case_study, run_case_study, CaseStudyFiles, CaseStudyProfile,
    CASE_STUDY_MATCH_WINDOW,
};
pub use eval::{evaluate, EvalError, Metrics};
pub use scenario::{
    generate, write_labeled_csv, Baseline, Diurnal, EventKind, EventSpec, Label, LabeledSample,
    ScenarioError, ScenarioSpec,
};
pub use sweep::{
    run_scenario, run_scenarios, run_scenarios_sequential, ScenarioOutcome, SynthError,
};
