//! Orchestration: fit every record, judge applicability, label with ADA,
//! classify in the (A, α) plane and assemble a deterministic report.

mod csv_io;
mod plot;
mod track;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ada::{classify_record, BinaryLabel, Category};
use crate::applicability::{check_applicability, ApplicabilityThresholds, ApplicabilityVerdict};
use crate::error::{Error, Result};
use crate::estimation::{fit, FitConfig, FitResult};
use crate::kv::KvFile;
use crate::model::{AckermanParams, OgttRecord};
use crate::svm::{
    self, progression_angles, tally, AccuracyReport, FeatureScaling, IndexPoint, ProgressionAngles,
    SvmModel,
};

pub use csv_io::{
    ingest_csv, ingest_reader, records_to_csv_string, write_csv, Ingested, REQUIRED_COLUMNS,
};
pub use plot::{emit_plot, render_plot_csv, render_svg, PlotFormat};
pub use track::{track, TrackOutcome, Trajectory, TrajectoryPoint};

/// Everything the command-line tool reads from a config file: the fit
/// settings, the applicability thresholds and the classifier settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub fit: FitConfig,
    pub thresholds: ApplicabilityThresholds,
    pub svm_c: f64,
    pub svm_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            thresholds: ApplicabilityThresholds::default(),
            svm_c: svm::DEFAULT_C,
            svm_tol: svm::DEFAULT_TOL,
        }
    }
}

impl PipelineConfig {
    /// Parses a config file. Missing keys keep their defaults, unknown keys
    /// are rejected.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut kv = KvFile::parse(text)?;
        let fit = FitConfig::take_from_kv(&mut kv)?;
        let thresholds = ApplicabilityThresholds::take_from_kv(&mut kv)?;
        let mut config = Self {
            fit,
            thresholds,
            ..Self::default()
        };
        if let Some(c) = kv.take("svm_c")? {
            config.svm_c = c;
        }
        if let Some(tol) = kv.take("svm_tol")? {
            config.svm_tol = tol;
        }
        kv.finish()?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_kv_string(&self) -> String {
        let mut out = self.fit.to_kv_string();
        let t = &self.thresholds;
        let _ = writeln!(out, "omega_max = {}", t.omega_max);
        let _ = writeln!(out, "cond1_error = {}", t.cond1_error);
        let _ = writeln!(out, "late_drop = {}", t.late_drop);
        let _ = writeln!(out, "cond2_error = {}", t.cond2_error);
        let _ = writeln!(out, "cond3_error = {}", t.cond3_error);
        let _ = writeln!(out, "svm_c = {}", self.svm_c);
        let _ = writeln!(out, "svm_tol = {}", self.svm_tol);
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.fit.validate()?;
        self.thresholds.validate()?;
        for (name, v) in [("svm_c", self.svm_c), ("svm_tol", self.svm_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Where the classifier comes from.
#[derive(Debug, Clone)]
pub enum SvmMode {
    /// Train on the evaluated records with this soft-margin constant.
    Train { c: f64 },
    /// Apply a previously trained model.
    Load(SvmModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    /// SHA-256 of the canonical config text, filter flag and model source.
    pub config_hash: String,
    /// SHA-256 of the records rendered in the canonical CSV form.
    pub input_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub filter: bool,
    /// `train` or `load`.
    pub svm_mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub patient_id: String,
    pub seq: Option<i64>,
    pub category: Category,
    pub params: AckermanParams,
    pub error_abs: f64,
    pub converged: bool,
    pub verdict: ApplicabilityVerdict,
    /// Counted in the aggregates: converged, and applicable when the
    /// filter is on.
    pub evaluated: bool,
    pub predicted: BinaryLabel,
    pub signed_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub records: usize,
    pub non_converged: usize,
    /// Converged and applicable.
    pub applicable: usize,
    /// `applicable` over the number of converged records.
    pub kept_fraction: f64,
    pub evaluated: usize,
    pub accuracy: AccuracyReport,
    /// Absent when fewer than two categories were evaluated.
    pub progression: Option<ProgressionAngles>,
    /// NGT, IGT group, T2DM met in clockwise order; absent when one of the
    /// groups has no evaluated members.
    pub ngt_igt_t2dm_clockwise: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub provenance: Provenance,
    pub settings: RunSettings,
    pub model: SvmModel,
    pub aggregates: Aggregates,
    pub entries: Vec<ReportEntry>,
}

/// Rounds to 9 significant digits. Every float stored in a report goes
/// through here so that the JSON text is reproducible and re-parsing it
/// gives back exactly the values the aggregates were computed from.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn round_params(p: &AckermanParams) -> AckermanParams {
    AckermanParams {
        g0: round_sig(p.g0),
        a: round_sig(p.a),
        alpha: round_sig(p.alpha),
        omega: round_sig(p.omega),
        delta: round_sig(p.delta),
    }
}

fn round_model(m: &SvmModel) -> SvmModel {
    SvmModel {
        w: m.w.map(round_sig),
        b: round_sig(m.b),
        c: m.c,
        scaling: FeatureScaling {
            shift: m.scaling.shift.map(round_sig),
            scale: m.scaling.scale.map(round_sig),
        },
    }
}

fn index_point(e: &ReportEntry) -> Result<IndexPoint> {
    IndexPoint::new(e.patient_id.clone(), e.params.a, e.params.alpha, e.category)
}

/// Fits every record, keeping best-effort results for non-converged fits.
/// Output order equals input order.
pub fn fit_all(records: &[OgttRecord], config: &FitConfig) -> Result<Vec<FitResult>> {
    records
        .par_iter()
        .map(|r| match fit(r, config) {
            Ok(f) => Ok(f),
            Err(Error::NonConvergence { best }) => Ok(*best),
            Err(e) => Err(e),
        })
        .collect()
}

pub fn run_pipeline(
    records: &[OgttRecord],
    config: &PipelineConfig,
    mode: &SvmMode,
    filter: bool,
) -> Result<CohortReport> {
    if records.is_empty() {
        return Err(Error::Input("the cohort has no records".into()));
    }
    config.validate()?;
    for r in records {
        r.validate()?;
    }
    let fits = fit_all(records, &config.fit)?;

    let mut entries = Vec::with_capacity(records.len());
    for (record, f) in records.iter().zip(&fits) {
        let verdict = check_applicability(record, f, &config.thresholds)?;
        entries.push(ReportEntry {
            patient_id: record.patient_id.clone(),
            seq: record.seq,
            category: classify_record(record)?.category,
            params: round_params(&f.params),
            error_abs: round_sig(f.error_abs),
            converged: f.converged,
            verdict: ApplicabilityVerdict {
                delta_g: round_sig(verdict.delta_g),
                error_abs: round_sig(verdict.error_abs),
                ..verdict
            },
            evaluated: f.converged && (!filter || verdict.applicable),
            predicted: BinaryLabel::Normoglycemic,
            signed_distance: 0.0,
        });
    }
    if !entries.iter().any(|e| e.evaluated) {
        return Err(Error::Pipeline(
            "no record is left for classification (all fits failed or were filtered out)".into(),
        ));
    }

    let (model, mode_name, model_source) = match mode {
        SvmMode::Train { c } => {
            let points = entries
                .iter()
                .filter(|e| e.evaluated)
                .map(index_point)
                .collect::<Result<Vec<_>>>()?;
            let model = svm::train(&points, *c, config.svm_tol).map_err(|e| match e {
                Error::Training(msg) => {
                    Error::Pipeline(format!("cannot train the classifier: {msg}"))
                }
                other => other,
            })?;
            (round_model(&model), "train", format!("train c = {c}\n"))
        }
        SvmMode::Load(model) => {
            model.validate()?;
            (
                model.clone(),
                "load",
                format!("load {}\n", model.to_json()?),
            )
        }
    };
    for e in &mut entries {
        let p = model.predict(e.params.a, e.params.alpha)?;
        e.predicted = p.label;
        e.signed_distance = round_sig(p.signed_distance);
    }

    let mut hashed = config.to_kv_string();
    let _ = writeln!(hashed, "filter = {filter}");
    hashed.push_str(&model_source);
    let provenance = Provenance {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: sha256_hex(hashed.as_bytes()),
        input_digest: sha256_hex(records_to_csv_string(records)?.as_bytes()),
    };
    let aggregates = compute_aggregates(&entries, &model)?;
    Ok(CohortReport {
        provenance,
        settings: RunSettings {
            filter,
            svm_mode: mode_name.to_string(),
        },
        model,
        aggregates,
        entries,
    })
}

/// Aggregates as a pure function of the entries and the model.
pub fn compute_aggregates(entries: &[ReportEntry], model: &SvmModel) -> Result<Aggregates> {
    let converged = entries.iter().filter(|e| e.converged).count();
    let applicable = entries
        .iter()
        .filter(|e| e.converged && e.verdict.applicable)
        .count();
    let evaluated: Vec<&ReportEntry> = entries.iter().filter(|e| e.evaluated).collect();
    if evaluated.is_empty() || converged == 0 {
        return Err(Error::Pipeline("no evaluated records".into()));
    }
    let mut accuracy = tally(evaluated.iter().map(|e| (e.category, e.predicted)))?;
    accuracy.overall = round_sig(accuracy.overall);
    for c in &mut accuracy.per_category {
        c.accuracy = round_sig(c.accuracy);
    }
    let points = evaluated
        .iter()
        .map(|e| index_point(e))
        .collect::<Result<Vec<_>>>()?;
    let progression = match progression_angles(&points, None, Some(&model.scaling)) {
        Ok(mut p) => {
            p.center = p.center.map(round_sig);
            for c in &mut p.categories {
                c.centroid = c.centroid.map(round_sig);
                c.angle = round_sig(c.angle);
            }
            Some(p)
        }
        Err(_) => None,
    };
    let ngt_igt_t2dm_clockwise = progression
        .as_ref()
        .and_then(|p| p.ngt_igt_t2dm_clockwise());
    Ok(Aggregates {
        records: entries.len(),
        non_converged: entries.len() - converged,
        applicable,
        kept_fraction: round_sig(applicable as f64 / converged as f64),
        evaluated: evaluated.len(),
        accuracy,
        progression,
        ngt_igt_t2dm_clockwise,
    })
}

impl CohortReport {
    /// Pretty-printed JSON with a trailing newline. Field order follows the
    /// struct definitions.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses a report and checks it with [`CohortReport::verify`].
    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        report.verify()?;
        Ok(report)
    }

    /// Recomputes predictions and aggregates from the entries and the model
    /// and requires an exact match with what is stored.
    pub fn verify(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::Pipeline(format!(
                "report is not self-consistent: {msg}"
            )))
        };
        self.model.validate()?;
        for e in &self.entries {
            let expect_eval = e.converged && (!self.settings.filter || e.verdict.applicable);
            if e.evaluated != expect_eval {
                return bad(format!(
                    "entry `{}` has the wrong evaluated flag",
                    e.patient_id
                ));
            }
            let p = self.model.predict(e.params.a, e.params.alpha)?;
            if p.label != e.predicted || round_sig(p.signed_distance) != e.signed_distance {
                return bad(format!(
                    "prediction for `{}` does not match the model",
                    e.patient_id
                ));
            }
        }
        if compute_aggregates(&self.entries, &self.model)? != self.aggregates {
            return bad("stored aggregates differ from the recomputed ones".into());
        }
        Ok(())
    }

    pub fn evaluated_points(&self) -> Result<Vec<IndexPoint>> {
        self.entries
            .iter()
            .filter(|e| e.evaluated)
            .map(index_point)
            .collect()
    }
}
