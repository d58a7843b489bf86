//! Linear separation of normoglycemic (+1) and dysglycemic (−1) subjects in
//! the (A, α) plane.
//!
//! Features are standardized (mean/standard deviation per axis, recorded in
//! the model) before a soft-margin linear SVM is trained; prediction applies
//! the stored scaling to raw `(A, α)` inputs.

mod solver;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::ada::{BinaryLabel, Category};
use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-6;

/// One subject in index space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexPoint {
    /// Peak glucose concentration amplitude, mg/dl.
    pub a: f64,
    /// Mean glucose removal rate, 1/min.
    pub alpha: f64,
    pub label: BinaryLabel,
    pub category: Category,
    pub patient_id: String,
}

impl IndexPoint {
    pub fn new(
        patient_id: impl Into<String>,
        a: f64,
        alpha: f64,
        category: Category,
    ) -> Result<Self> {
        let point = Self {
            a,
            alpha,
            label: category.binary(),
            category,
            patient_id: patient_id.into(),
        };
        point.validate()?;
        Ok(point)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.alpha > 0.0 && self.a.is_finite() && self.alpha.is_finite()) {
            return Err(Error::Input(format!(
                "index point `{}` needs positive finite a and alpha, got ({}, {})",
                self.patient_id, self.a, self.alpha
            )));
        }
        if self.label != self.category.binary() {
            return Err(Error::Input(format!(
                "index point `{}`: label disagrees with category {}",
                self.patient_id, self.category
            )));
        }
        Ok(())
    }
}

/// Per-feature affine map `(v - shift) / scale` for `[A, α]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub shift: [f64; 2],
    pub scale: [f64; 2],
}

impl FeatureScaling {
    pub const IDENTITY: FeatureScaling = FeatureScaling {
        shift: [0.0, 0.0],
        scale: [1.0, 1.0],
    };

    /// Mean and population standard deviation of each feature. A feature
    /// with zero spread keeps scale 1.
    pub fn standardize(points: &[IndexPoint]) -> Self {
        let n = points.len() as f64;
        let raw: Vec<[f64; 2]> = points.iter().map(|p| [p.a, p.alpha]).collect();
        let mut shift = [0.0; 2];
        let mut scale = [1.0; 2];
        for d in 0..2 {
            let mean = raw.iter().map(|r| r[d]).sum::<f64>() / n;
            let var = raw.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
            shift[d] = mean;
            if var.sqrt() > 0.0 {
                scale[d] = var.sqrt();
            }
        }
        Self { shift, scale }
    }

    pub fn apply(&self, a: f64, alpha: f64) -> [f64; 2] {
        [
            (a - self.shift[0]) / self.scale[0],
            (alpha - self.shift[1]) / self.scale[1],
        ]
    }

    pub fn invert(&self, u: [f64; 2]) -> [f64; 2] {
        [
            u[0] * self.scale[0] + self.shift[0],
            u[1] * self.scale[1] + self.shift[1],
        ]
    }

    fn validate(&self) -> Result<()> {
        let ok = self.shift.iter().all(|v| v.is_finite())
            && self.scale.iter().all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Model(format!("invalid feature scaling {self:?}")))
        }
    }
}

/// Trained separator: `w·scaling(A, α) + b`, positive side normoglycemic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub w: [f64; 2],
    pub b: f64,
    pub c: f64,
    pub scaling: FeatureScaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: BinaryLabel,
    /// Distance to the decision line in scaled units, positive on the +1 side.
    pub signed_distance: f64,
}

impl SvmModel {
    pub fn validate(&self) -> Result<()> {
        self.scaling.validate()?;
        if !(self.w.iter().all(|v| v.is_finite()) && self.b.is_finite()) {
            return Err(Error::Model("non-finite weights".into()));
        }
        if self.norm() <= 0.0 {
            return Err(Error::Model("weight vector is zero".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Model(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.w[0].hypot(self.w[1])
    }

    /// `w·scaling(A, α) + b`.
    pub fn score(&self, a: f64, alpha: f64) -> f64 {
        let u = self.scaling.apply(a, alpha);
        self.w[0] * u[0] + self.w[1] * u[1] + self.b
    }

    pub fn predict(&self, a: f64, alpha: f64) -> Result<Prediction> {
        self.validate()?;
        if !(a.is_finite() && alpha.is_finite()) {
            return Err(Error::Input(format!("non-finite index ({a}, {alpha})")));
        }
        let score = self.score(a, alpha);
        Ok(Prediction {
            label: BinaryLabel::from_score(score),
            signed_distance: score / self.norm(),
        })
    }

    /// Soft-margin objective of this model on `points`, in scaled space.
    pub fn objective(&self, points: &[IndexPoint]) -> f64 {
        let (x, y) = self.design(points);
        solver::primal(&x, &y, self.c, &self.w, self.b)
    }

    /// Sum of hinge losses on `points`.
    pub fn hinge_loss(&self, points: &[IndexPoint]) -> f64 {
        points
            .iter()
            .map(|p| (1.0 - p.label.sign() * self.score(p.a, p.alpha)).max(0.0))
            .sum()
    }

    fn design(&self, points: &[IndexPoint]) -> (Vec<[f64; 2]>, Vec<f64>) {
        points
            .iter()
            .map(|p| (self.scaling.apply(p.a, p.alpha), p.label.sign()))
            .unzip()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone)]
pub struct TrainingTrace {
    /// Primal objective of the incumbent, non-increasing.
    pub objective: Vec<f64>,
    /// Primal objective of the returned model.
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

/// Trains with standardized features.
pub fn train(points: &[IndexPoint], c: f64, tol: f64) -> Result<SvmModel> {
    train_with_trace(points, c, tol).map(|(m, _)| m)
}

pub fn train_with_trace(
    points: &[IndexPoint],
    c: f64,
    tol: f64,
) -> Result<(SvmModel, TrainingTrace)> {
    let scaling = FeatureScaling::standardize(points);
    train_scaled(points, c, tol, scaling)
}

/// Trains in the space defined by a caller-supplied scaling.
pub fn train_scaled(
    points: &[IndexPoint],
    c: f64,
    tol: f64,
    scaling: FeatureScaling,
) -> Result<(SvmModel, TrainingTrace)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Training(format!("c must be positive, got {c}")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Training(format!("tol must be positive, got {tol}")));
    }
    for p in points {
        p.validate()?;
    }
    scaling.validate()?;
    let n_plus = points
        .iter()
        .filter(|p| p.label == BinaryLabel::Normoglycemic)
        .count();
    if n_plus == 0 || n_plus == points.len() {
        return Err(Error::Training(
            "need at least one point of each label".into(),
        ));
    }
    if points
        .iter()
        .all(|p| p.a == points[0].a && p.alpha == points[0].alpha)
    {
        return Err(Error::Training("all points are identical".into()));
    }

    let (x, y): (Vec<[f64; 2]>, Vec<f64>) = points
        .iter()
        .map(|p| (scaling.apply(p.a, p.alpha), p.label.sign()))
        .unzip();
    let max_iterations = 10_000 + 200 * points.len();
    let sol = solver::solve(&x, &y, c, tol, max_iterations);
    let model = SvmModel {
        w: sol.w,
        b: sol.b,
        c,
        scaling,
    };
    if model.norm() <= 0.0 {
        return Err(Error::Training(
            "optimal weight vector is zero; classes are not separable by any line at this c".into(),
        ));
    }
    Ok((
        model,
        TrainingTrace {
            objective: sol.trace,
            primal_objective: sol.objective,
            dual_objective: sol.dual_objective,
            iterations: sol.iterations,
        },
    ))
}

/// Actual × predicted counts, +1 first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub normo_as_normo: usize,
    pub normo_as_dys: usize,
    pub dys_as_normo: usize,
    pub dys_as_dys: usize,
}

impl ConfusionMatrix {
    pub fn add(&mut self, actual: BinaryLabel, predicted: BinaryLabel) {
        use BinaryLabel::*;
        match (actual, predicted) {
            (Normoglycemic, Normoglycemic) => self.normo_as_normo += 1,
            (Normoglycemic, Dysglycemic) => self.normo_as_dys += 1,
            (Dysglycemic, Normoglycemic) => self.dys_as_normo += 1,
            (Dysglycemic, Dysglycemic) => self.dys_as_dys += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.normo_as_normo + self.normo_as_dys + self.dys_as_normo + self.dys_as_dys
    }

    pub fn correct(&self) -> usize {
        self.normo_as_normo + self.dys_as_dys
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAccuracy {
    pub category: Category,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub total: usize,
    pub correct: usize,
    pub overall: f64,
    /// Categories without members are omitted.
    pub per_category: Vec<CategoryAccuracy>,
    pub confusion: ConfusionMatrix,
    /// T2DM subjects predicted normoglycemic.
    pub t2dm_as_normo: usize,
}

/// Builds the report from `(category, predicted)` pairs.
pub fn tally<I>(outcomes: I) -> Result<AccuracyReport>
where
    I: IntoIterator<Item = (Category, BinaryLabel)>,
{
    let mut confusion = ConfusionMatrix::default();
    let mut per = [(0usize, 0usize); 5];
    let mut t2dm_as_normo = 0;
    for (category, predicted) in outcomes {
        let actual = category.binary();
        confusion.add(actual, predicted);
        let slot = &mut per[Category::ALL.iter().position(|c| *c == category).unwrap()];
        slot.0 += 1;
        if actual == predicted {
            slot.1 += 1;
        }
        if category == Category::T2dm && predicted == BinaryLabel::Normoglycemic {
            t2dm_as_normo += 1;
        }
    }
    let total = confusion.total();
    if total == 0 {
        return Err(Error::Input(
            "accuracy report needs at least one point".into(),
        ));
    }
    let per_category = Category::ALL
        .iter()
        .zip(per)
        .filter(|(_, (n, _))| *n > 0)
        .map(|(c, (n, k))| CategoryAccuracy {
            category: *c,
            total: n,
            correct: k,
            accuracy: k as f64 / n as f64,
        })
        .collect();
    Ok(AccuracyReport {
        total,
        correct: confusion.correct(),
        overall: confusion.correct() as f64 / total as f64,
        per_category,
        confusion,
        t2dm_as_normo,
    })
}

pub fn accuracy_report(model: &SvmModel, points: &[IndexPoint]) -> Result<AccuracyReport> {
    if points.is_empty() {
        return Err(Error::Input(
            "accuracy report needs at least one point".into(),
        ));
    }
    let outcomes = points
        .iter()
        .map(|p| Ok((p.category, model.predict(p.a, p.alpha)?.label)))
        .collect::<Result<Vec<_>>>()?;
    tally(outcomes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAngle {
    pub category: Category,
    pub count: usize,
    /// Centroid in scaled coordinates.
    pub centroid: [f64; 2],
    /// Angle of the centroid about the center, radians in `(-π, π]`.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionAngles {
    pub center: [f64; 2],
    /// Sorted clockwise, i.e. by decreasing angle.
    pub categories: Vec<CategoryAngle>,
}

impl ProgressionAngles {
    pub fn angle_of(&self, category: Category) -> Option<f64> {
        self.categories
            .iter()
            .find(|c| c.category == category)
            .map(|c| c.angle)
    }

    /// Angle of the pooled centroid of several categories.
    pub fn group_angle(&self, group: &[Category]) -> Option<f64> {
        let members: Vec<&CategoryAngle> = self
            .categories
            .iter()
            .filter(|c| group.contains(&c.category))
            .collect();
        let n: usize = members.iter().map(|c| c.count).sum();
        if n == 0 {
            return None;
        }
        let mut centroid = [0.0; 2];
        for m in &members {
            for (acc, v) in centroid.iter_mut().zip(m.centroid) {
                *acc += v * m.count as f64 / n as f64;
            }
        }
        Some((centroid[1] - self.center[1]).atan2(centroid[0] - self.center[0]))
    }

    /// True when, sweeping clockwise from the first group, the remaining
    /// groups are met in the given order. `None` if a group has no members.
    pub fn is_clockwise(&self, groups: &[&[Category]]) -> Option<bool> {
        let angles = groups
            .iter()
            .map(|g| self.group_angle(g))
            .collect::<Option<Vec<f64>>>()?;
        let start = *angles.first()?;
        let swept: Vec<f64> = angles.iter().map(|a| (start - a).rem_euclid(TAU)).collect();
        Some(swept.windows(2).all(|w| w[0] < w[1]))
    }

    /// NGT, then the IGT group (IGT and IFG-IGT), then T2DM.
    pub fn ngt_igt_t2dm_clockwise(&self) -> Option<bool> {
        self.is_clockwise(&[
            &[Category::Ngt],
            &[Category::Igt, Category::IfgIgt],
            &[Category::T2dm],
        ])
    }
}

/// Category centroids and their angles about `center` (default: centroid of
/// all points) in scaled coordinates. Without an explicit scaling the points
/// are standardized.
pub fn progression_angles(
    points: &[IndexPoint],
    center: Option<[f64; 2]>,
    scaling: Option<&FeatureScaling>,
) -> Result<ProgressionAngles> {
    let scaling = scaling
        .copied()
        .unwrap_or_else(|| FeatureScaling::standardize(points));
    let scaled: Vec<(Category, [f64; 2])> = points
        .iter()
        .map(|p| (p.category, scaling.apply(p.a, p.alpha)))
        .collect();
    let present = Category::ALL
        .iter()
        .filter(|c| scaled.iter().any(|(k, _)| k == *c))
        .count();
    if present < 2 {
        return Err(Error::Input(
            "progression angles need at least two categories".into(),
        ));
    }
    let mean = |sel: &dyn Fn(&Category) -> bool| {
        let pts: Vec<&[f64; 2]> = scaled
            .iter()
            .filter(|(k, _)| sel(k))
            .map(|(_, u)| u)
            .collect();
        let n = pts.len() as f64;
        let c = [
            pts.iter().map(|u| u[0]).sum::<f64>() / n,
            pts.iter().map(|u| u[1]).sum::<f64>() / n,
        ];
        (pts.len(), c)
    };
    let center = center.unwrap_or_else(|| mean(&|_| true).1);
    let mut categories: Vec<CategoryAngle> = Category::ALL
        .iter()
        .filter_map(|cat| {
            let (count, centroid) = mean(&|k| k == cat);
            (count > 0).then(|| {
                let mut angle = (centroid[1] - center[1]).atan2(centroid[0] - center[0]);
                if angle == -PI {
                    angle = PI;
                }
                CategoryAngle {
                    category: *cat,
                    count,
                    centroid,
                    angle,
                }
            })
        })
        .collect();
    categories.sort_by(|a, b| b.angle.total_cmp(&a.angle));
    Ok(ProgressionAngles { center, categories })
}

#[cfg(test)]
mod tests;
