//! Whether Ackerman's model describes a fitted record.
//!
//! A record is accepted when `ω < 0.09` and one of three conditions holds,
//! checked in order:
//!
//! 1. `Error_abs < 4.5`
//! 2. `|G90 - G120| < 4.5` and `Error_abs < 5`
//! 3. `|G90 - G120| >= 4.5` and `Error_abs < 7.5`
//!
//! The ω bound limits the curve to at most two oscillations over the test;
//! equivalently the period `2π/ω` must exceed about 70 minutes. A drop of
//! exactly 4.5 mg/dl is assigned to condition 3.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::kv::KvFile;
use crate::model::{error_abs, period, OgttRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplicabilityThresholds {
    /// Strict upper bound on ω, rad/min.
    pub omega_max: f64,
    /// Condition 1 error bound, mg/dl.
    pub cond1_error: f64,
    /// Split of `|G90 - G120|` between conditions 2 and 3, mg/dl.
    pub late_drop: f64,
    pub cond2_error: f64,
    pub cond3_error: f64,
}

impl Default for ApplicabilityThresholds {
    fn default() -> Self {
        Self {
            omega_max: 0.09,
            cond1_error: 4.5,
            late_drop: 4.5,
            cond2_error: 5.0,
            cond3_error: 7.5,
        }
    }
}

impl ApplicabilityThresholds {
    /// Minimum period, minutes, equivalent to the ω bound.
    pub fn min_period(&self) -> f64 {
        TAU / self.omega_max
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega_max,
            self.cond1_error,
            self.late_drop,
            self.cond2_error,
            self.cond3_error,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "thresholds must be positive: {self:?}"
            )))
        }
    }

    /// Reads `omega_max`, `cond1_error`, `late_drop`, `cond2_error` and
    /// `cond3_error` from a shared config file, defaulting the rest.
    pub fn take_from_kv(kv: &mut KvFile) -> Result<Self> {
        let mut t = Self::default();
        for (key, slot) in [
            ("omega_max", &mut t.omega_max),
            ("cond1_error", &mut t.cond1_error),
            ("late_drop", &mut t.late_drop),
            ("cond2_error", &mut t.cond2_error),
            ("cond3_error", &mut t.cond3_error),
        ] {
            if let Some(v) = kv.take(key)? {
                *slot = v;
            }
        }
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    Cond1,
    Cond2,
    Cond3,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplicabilityVerdict {
    pub applicable: bool,
    pub omega_ok: bool,
    pub condition: Condition,
    /// `|G90 - G120|`, mg/dl.
    pub delta_g: f64,
    pub error_abs: f64,
}

/// Verdict from the raw quantities. `omega_ok` is passed in so that the ω and
/// period forms of the frequency bound share the remaining logic.
pub fn verdict_from_parts(
    omega_ok: bool,
    error_abs: f64,
    delta_g: f64,
    thresholds: &ApplicabilityThresholds,
) -> ApplicabilityVerdict {
    let condition = if error_abs < thresholds.cond1_error {
        Condition::Cond1
    } else if delta_g < thresholds.late_drop && error_abs < thresholds.cond2_error {
        Condition::Cond2
    } else if delta_g >= thresholds.late_drop && error_abs < thresholds.cond3_error {
        Condition::Cond3
    } else {
        Condition::None
    };
    ApplicabilityVerdict {
        applicable: omega_ok && condition != Condition::None,
        omega_ok,
        condition,
        delta_g,
        error_abs,
    }
}

fn consistent_error(record: &OgttRecord, fit: &FitResult) -> Result<f64> {
    let recomputed = error_abs(record, &fit.params)?;
    if (recomputed - fit.error_abs).abs() > 1e-9 * recomputed.max(1.0) {
        return Err(Error::Input(format!(
            "fit does not belong to record `{}`: stored error_abs {} vs recomputed {}",
            record.patient_id, fit.error_abs, recomputed
        )));
    }
    Ok(fit.error_abs)
}

pub fn check_applicability(
    record: &OgttRecord,
    fit: &FitResult,
    thresholds: &ApplicabilityThresholds,
) -> Result<ApplicabilityVerdict> {
    let err = consistent_error(record, fit)?;
    let omega_ok = fit.params.omega < thresholds.omega_max;
    Ok(verdict_from_parts(
        omega_ok,
        err,
        record.late_drop(),
        thresholds,
    ))
}

/// Same decision with the frequency bound expressed as a minimum period.
pub fn check_applicability_by_period(
    record: &OgttRecord,
    fit: &FitResult,
    thresholds: &ApplicabilityThresholds,
) -> Result<ApplicabilityVerdict> {
    let err = consistent_error(record, fit)?;
    let omega_ok = period(&fit.params)? > thresholds.min_period();
    Ok(verdict_from_parts(
        omega_ok,
        err,
        record.late_drop(),
        thresholds,
    ))
}

#[derive(Debug, Clone)]
pub struct FilterOutcome<T> {
    pub kept: Vec<(T, ApplicabilityVerdict)>,
    pub rejected: Vec<(T, ApplicabilityVerdict)>,
    pub kept_fraction: f64,
}

/// Partitions `(record, fit)` pairs by applicability, preserving input order
/// within each side.
pub fn filter_population<'a>(
    fits: &'a [(OgttRecord, FitResult)],
    thresholds: &ApplicabilityThresholds,
) -> Result<FilterOutcome<&'a (OgttRecord, FitResult)>> {
    if fits.is_empty() {
        return Err(Error::Input("cannot filter an empty population".into()));
    }
    let verdicts: Vec<ApplicabilityVerdict> = fits
        .par_iter()
        .map(|(record, fit)| check_applicability(record, fit, thresholds))
        .collect::<Result<_>>()?;
    let (kept, rejected): (Vec<_>, Vec<_>) =
        fits.iter().zip(verdicts).partition(|(_, v)| v.applicable);
    let kept_fraction = kept.len() as f64 / fits.len() as f64;
    Ok(FilterOutcome {
        kept,
        rejected,
        kept_fraction,
    })
}
