//! Glucose-tolerance indices from five-point OGTT records.
//!
//! Records are fitted to Ackerman's damped-oscillation curve
//! `G(t) = G0 + A·exp(-α·t)·cos(ω·t - δ)`; the amplitude `A` and the
//! removal rate `α` are then used as a two-dimensional index for separating
//! normoglycemic from dysglycemic subjects with a soft-margin linear
//! classifier. Supporting modules label records with ADA rules, decide
//! whether the model is applicable to a given record, generate synthetic
//! cohorts and orchestrate the whole run into a JSON report.

pub mod ada;
pub mod applicability;
pub mod error;
pub mod estimation;
pub mod kv;
pub mod model;
pub mod pipeline;
pub mod svm;
pub mod synth;

pub use ada::{classify_ada, classify_record, AdaLabel, BinaryLabel, Category};
pub use applicability::{
    check_applicability, filter_population, ApplicabilityThresholds, ApplicabilityVerdict,
    Condition, FilterOutcome,
};
pub use error::{Error, Result};
pub use estimation::{default_fit_config, fit, FitConfig, FitResult};
pub use model::{
    error_abs, evaluate, period, predict_at_sample_times, AckermanParams, OgttRecord, Sex,
    SAMPLE_TIMES,
};
pub use pipeline::{
    emit_plot, ingest_csv, run_pipeline, track, CohortReport, PipelineConfig, PlotFormat, SvmMode,
    Trajectory,
};
pub use svm::{IndexPoint, SvmModel};
