//! Longitudinal tracking of patients with repeated tests.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ada::{classify_record, AdaLabel, Category};
use crate::error::{Error, Result};
use crate::estimation::FitConfig;
use crate::model::OgttRecord;
use crate::svm::{IndexPoint, SvmModel};

use super::fit_all;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// The record's `seq`, or its position in the input when no record of
    /// the patient carries one.
    pub order: i64,
    pub point: IndexPoint,
    pub ada: AdaLabel,
    pub error_abs: f64,
    pub converged: bool,
    /// Present when a model was supplied.
    pub signed_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub patient_id: String,
    /// Strictly increasing `order`, at least two points.
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn categories(&self) -> Vec<Category> {
        self.points.iter().map(|p| p.ada.category).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackOutcome {
    pub trajectories: Vec<Trajectory>,
    pub warnings: Vec<String>,
}

/// Groups records by patient (first appearance order), fits each record and
/// orders every patient's visits. Patients with a single record are skipped.
pub fn track(
    records: &[OgttRecord],
    config: &FitConfig,
    model: Option<&SvmModel>,
) -> Result<TrackOutcome> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let slot = groups.entry(r.patient_id.as_str()).or_default();
        if slot.is_empty() {
            order.push(r.patient_id.as_str());
        }
        slot.push(i);
    }

    let mut keyed: Vec<(&str, Vec<(i64, usize)>)> = Vec::new();
    for id in order {
        let idx = &groups[id];
        if idx.len() < 2 {
            continue;
        }
        let with_seq = idx.iter().filter(|&&i| records[i].seq.is_some()).count();
        let keys: Vec<(i64, usize)> = if with_seq == idx.len() {
            let mut seen = BTreeSet::new();
            let mut keys = Vec::new();
            for &i in idx {
                let seq = records[i].seq.expect("checked above");
                if !seen.insert(seq) {
                    return Err(Error::Input(format!(
                        "patient `{id}` has two records with seq {seq}"
                    )));
                }
                keys.push((seq, i));
            }
            keys.sort_unstable();
            keys
        } else if with_seq == 0 {
            idx.iter().map(|&i| (i as i64, i)).collect()
        } else {
            return Err(Error::Input(format!(
                "patient `{id}`: either every record or none must have a seq value"
            )));
        };
        keyed.push((id, keys));
    }

    let mut outcome = TrackOutcome::default();
    if keyed.is_empty() {
        outcome
            .warnings
            .push("no patient has two or more records; nothing to track".into());
        return Ok(outcome);
    }

    let selected: Vec<OgttRecord> = keyed
        .iter()
        .flat_map(|(_, keys)| keys.iter().map(|&(_, i)| records[i].clone()))
        .collect();
    let fits = fit_all(&selected, config)?;
    let mut next = selected.iter().zip(fits);
    for (id, keys) in keyed {
        let mut points = Vec::with_capacity(keys.len());
        for (key, _) in keys {
            let (record, f) = next.next().expect("one fit per selected record");
            let ada = classify_record(record)?;
            if !f.converged {
                outcome.warnings.push(format!(
                    "patient `{id}`, order {key}: fit did not converge; the best estimate is used"
                ));
            }
            let signed_distance = match model {
                Some(m) => Some(m.predict(f.params.a, f.params.alpha)?.signed_distance),
                None => None,
            };
            points.push(TrajectoryPoint {
                order: key,
                point: IndexPoint::new(id, f.params.a, f.params.alpha, ada.category)?,
                ada,
                error_abs: f.error_abs,
                converged: f.converged,
                signed_distance,
            });
        }
        outcome.trajectories.push(Trajectory {
            patient_id: id.to_string(),
            points,
        });
    }
    Ok(outcome)
}
