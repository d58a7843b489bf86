//! Seeded synthetic cohorts with known ground truth.
//!
//! Each cluster draws `(A, α)` from a normal distribution truncated by
//! rejection, and `g0`, `ω`, `δ` uniformly from their ranges. Records are the
//! model evaluated at the five sample times, plus optional Gaussian noise,
//! clamped to `[40, 600]` mg/dl.
//!
//! Cluster `k` draws from `ChaCha8Rng::seed_from_u64(mix(seed, k))` and its
//! noise from `mix(noise.seed, k)`, where `mix` is one SplitMix64 step of
//! `seed ^ (k + 1)·0x9E3779B97F4A7C15`. Clusters are therefore independent
//! of each other's sizes.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ada::{classify_record, Category};
use crate::error::{Error, Result};
use crate::estimation::{default_fit_config, Interval};
use crate::model::{predict_at_sample_times, AckermanParams, OgttRecord, Sex};

pub const CLAMP: Interval = Interval::new(40.0, 600.0);
const MAX_REJECTIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub category: Category,
    /// Mean `(A, α)`.
    pub center: [f64; 2],
    /// Standard deviations of `(A, α)`.
    pub spread: [f64; 2],
    pub g0_range: Interval,
    pub omega_range: Interval,
    pub delta_range: Interval,
    pub count: usize,
}

impl ClusterSpec {
    fn validate(&self) -> Result<()> {
        let positive = self
            .center
            .iter()
            .chain(&self.spread)
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.count == 0 {
            return Err(Error::Generation(format!(
                "cluster {}: center and spread must be positive and count >= 1",
                self.category
            )));
        }
        for (name, r) in [
            ("g0", self.g0_range),
            ("omega", self.omega_range),
            ("delta", self.delta_range),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return Err(Error::Generation(format!(
                    "cluster {}: bad {name} range [{}, {}]",
                    self.category, r.lo, r.hi
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// mg/dl.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        kind: NoiseKind::None,
        sigma: 0.0,
        seed: 0,
    };

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            sigma,
            seed,
        }
    }
}

/// A generated record with the parameters and category it was drawn for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRecord {
    pub record: OgttRecord,
    pub truth: AckermanParams,
    pub intended: Category,
}

pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ (stream.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(rng: &mut ChaCha8Rng, r: Interval) -> f64 {
    if r.lo == r.hi {
        r.lo
    } else {
        rng.random_range(r.lo..r.hi)
    }
}

/// Draws one parameter set. Besides the model invariants, a draw is rejected
/// when its noiseless curve leaves the clamp range at a sample time or when
/// its baseline falls outside the default fitting bounds, so that clamping
/// only ever acts on noise.
fn draw_params(spec: &ClusterSpec, rng: &mut ChaCha8Rng) -> Result<AckermanParams> {
    let a_dist = Normal::new(spec.center[0], spec.spread[0]).expect("validated spread");
    let alpha_dist = Normal::new(spec.center[1], spec.spread[1]).expect("validated spread");
    let fit_box = default_fit_config();
    for _ in 0..MAX_REJECTIONS {
        let a = a_dist.sample(rng);
        let alpha = alpha_dist.sample(rng);
        let g0 = uniform(rng, spec.g0_range);
        let omega = uniform(rng, spec.omega_range);
        let delta = uniform(rng, spec.delta_range);
        let Ok(p) = AckermanParams::new(g0, a, alpha, omega, delta) else {
            continue;
        };
        let g = predict_at_sample_times(&p)?;
        let in_range = g.iter().all(|v| CLAMP.contains(*v));
        let g0_box = fit_box.g0.resolve(g[0]);
        if in_range && g0_box.contains(g0) && fit_box.a.contains(a) && fit_box.alpha.contains(alpha)
        {
            return Ok(p);
        }
    }
    Err(Error::Generation(format!(
        "cluster {}: no admissible parameter draw after {MAX_REJECTIONS} rejections",
        spec.category
    )))
}

pub fn generate_cohort(
    specs: &[ClusterSpec],
    noise: NoiseSpec,
    seed: u64,
) -> Result<Vec<SyntheticRecord>> {
    if specs.is_empty() {
        return Err(Error::Generation("no cluster specs".into()));
    }
    if !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return Err(Error::Generation(format!(
            "noise sigma must be >= 0, got {}",
            noise.sigma
        )));
    }
    let mut out = Vec::with_capacity(specs.iter().map(|s| s.count).sum());
    for (k, spec) in specs.iter().enumerate() {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k as u64));
        let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(noise.seed, k as u64));
        let noise_dist = match noise.kind {
            NoiseKind::Gaussian if noise.sigma > 0.0 => {
                Some(Normal::new(0.0, noise.sigma).expect("sigma > 0"))
            }
            _ => None,
        };
        for i in 0..spec.count {
            let truth = draw_params(spec, &mut rng)?;
            let mut g = predict_at_sample_times(&truth)?;
            if let Some(dist) = &noise_dist {
                for v in g.iter_mut() {
                    *v += dist.sample(&mut noise_rng);
                }
            }
            let g = g.map(|v| v.clamp(CLAMP.lo, CLAMP.hi));
            let sex = if rng.random_bool(0.67) {
                Sex::F
            } else {
                Sex::M
            };
            let age = rng.random_range(18..=80);
            let record = OgttRecord::new(format!("syn-{k}-{i:04}"), g)?
                .with_sex(sex)
                .with_age(Some(age));
            out.push(SyntheticRecord {
                record,
                truth,
                intended: spec.category,
            });
        }
    }
    Ok(out)
}

/// Cluster sizes of the reference cohort (1210 records): NGT, IFG, IGT,
/// IFG-IGT, T2DM.
pub const REFERENCE_COUNTS: [(Category, usize); 5] = [
    (Category::Ngt, 687),
    (Category::Ifg, 102),
    (Category::Igt, 186),
    (Category::IfgIgt, 106),
    (Category::T2dm, 129),
];

/// Noise added to the reference cohort, mg/dl.
pub const REFERENCE_SIGMA: f64 = 2.0;

/// Minimum share of reference records whose ADA label equals the intended
/// category.
pub const REFERENCE_MIN_AGREEMENT: f64 = 0.9;

/// Invented cluster geometry for the reference cohort.
///
/// NGT and IFG share a high-α, low-A region; the IGT group sits at large A
/// and intermediate α; T2DM at large A and the lowest α. Phases near π/2 make
/// the curve start at its baseline, so `g0` sets the fasting value. The
/// remaining constants were tuned so that the ADA label of each generated
/// record matches its cluster (IGT and IFG-IGT need `A·exp(-120α)` around
/// 60-80 mg/dl, T2DM well above 100).
pub fn reference_specs() -> Vec<ClusterSpec> {
    let phase = Interval::new(FRAC_PI_2 - 0.02, FRAC_PI_2 + 0.03);
    let spec = |category, center, spread, g0: (f64, f64), omega: (f64, f64)| ClusterSpec {
        category,
        center,
        spread,
        g0_range: Interval::new(g0.0, g0.1),
        omega_range: Interval::new(omega.0, omega.1),
        delta_range: phase,
        count: REFERENCE_COUNTS
            .iter()
            .find(|(c, _)| *c == category)
            .map(|(_, n)| *n)
            .unwrap_or(0),
    };
    vec![
        spec(
            Category::Ngt,
            [70.0, 0.030],
            [12.0, 0.004],
            (80.0, 93.0),
            (0.035, 0.05),
        ),
        spec(
            Category::Ifg,
            [65.0, 0.030],
            [12.0, 0.004],
            (107.0, 119.0),
            (0.035, 0.05),
        ),
        spec(
            Category::Igt,
            [250.0, 0.0095],
            [15.0, 0.0007],
            (80.0, 90.0),
            (0.012, 0.016),
        ),
        spec(
            Category::IfgIgt,
            [240.0, 0.0105],
            [15.0, 0.0007],
            (106.0, 116.0),
            (0.012, 0.016),
        ),
        spec(
            Category::T2dm,
            [250.0, 0.003],
            [25.0, 0.0006],
            (100.0, 125.0),
            (0.010, 0.013),
        ),
    ]
}

/// Share of records whose ADA label equals their intended category.
pub fn ada_agreement(cohort: &[SyntheticRecord]) -> Result<f64> {
    if cohort.is_empty() {
        return Err(Error::Input("empty cohort".into()));
    }
    let mut agree = 0;
    for s in cohort {
        if classify_record(&s.record)?.category == s.intended {
            agree += 1;
        }
    }
    Ok(agree as f64 / cohort.len() as f64)
}

/// The reference cohort (1210 records) with [`REFERENCE_SIGMA`] noise.
/// Fails if the ADA agreement falls below [`REFERENCE_MIN_AGREEMENT`].
pub fn reference_cohort(seed: u64) -> Result<Vec<SyntheticRecord>> {
    let cohort = generate_cohort(
        &reference_specs(),
        NoiseSpec::gaussian(REFERENCE_SIGMA, mix_seed(seed, u64::MAX)),
        seed,
    )?;
    let agreement = ada_agreement(&cohort)?;
    if agreement < REFERENCE_MIN_AGREEMENT {
        let mut per = String::new();
        for (cat, _) in REFERENCE_COUNTS {
            let members: Vec<&SyntheticRecord> =
                cohort.iter().filter(|s| s.intended == cat).collect();
            let ok = members
                .iter()
                .filter(|s| {
                    classify_record(&s.record)
                        .map(|l| l.category == cat)
                        .unwrap_or(false)
                })
                .count();
            per.push_str(&format!(" {cat}: {ok}/{}", members.len()));
        }
        return Err(Error::Generation(format!(
            "ADA agreement {agreement:.3} below {REFERENCE_MIN_AGREEMENT};{per}"
        )));
    }
    Ok(cohort)
}

/// Ground-truth parameters as pretty JSON, keyed by patient id in cohort order.
pub fn truth_json(cohort: &[SyntheticRecord]) -> Result<String> {
    #[derive(Serialize)]
    struct Row<'a> {
        patient_id: &'a str,
        intended: Category,
        params: AckermanParams,
    }
    let rows: Vec<Row> = cohort
        .iter()
        .map(|s| Row {
            patient_id: &s.record.patient_id,
            intended: s.intended,
            params: s.truth,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::error_abs;

    fn small_spec(count: usize) -> ClusterSpec {
        ClusterSpec {
            count,
            ..reference_specs()[0].clone()
        }
    }

    #[test]
    fn noiseless_records_match_truth() {
        let cohort = generate_cohort(&[small_spec(50)], NoiseSpec::NONE, 3).unwrap();
        for s in &cohort {
            assert_eq!(error_abs(&s.record, &s.truth).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_sigma_gaussian_equals_none() {
        let a = generate_cohort(&[small_spec(20)], NoiseSpec::NONE, 3).unwrap();
        let b = generate_cohort(&[small_spec(20)], NoiseSpec::gaussian(0.0, 99), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic() {
        let specs = reference_specs();
        let a = generate_cohort(&specs, NoiseSpec::gaussian(2.0, 1), 8).unwrap();
        let b = generate_cohort(&specs, NoiseSpec::gaussian(2.0, 1), 8).unwrap();
        assert_eq!(a, b);
        let c = generate_cohort(&specs, NoiseSpec::gaussian(2.0, 1), 9).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn half_normal_noise_mean() {
        let sigma = 3.0;
        let clean = generate_cohort(&[small_spec(1000)], NoiseSpec::NONE, 4).unwrap();
        let noisy = generate_cohort(&[small_spec(1000)], NoiseSpec::gaussian(sigma, 5), 4).unwrap();
        let diffs: Vec<f64> = clean
            .iter()
            .zip(&noisy)
            .flat_map(|(c, n)| (0..5).map(move |i| (c.record.g[i] - n.record.g[i]).abs()))
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        // E|N(0, σ²)| = σ·√(2/π) ≈ 2.3937 for σ = 3
        let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!(
            (mean - expected).abs() < 0.2 * expected,
            "{mean} vs {expected}"
        );
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(generate_cohort(&[], NoiseSpec::NONE, 0).is_err());
        let zero = ClusterSpec {
            count: 0,
            ..small_spec(1)
        };
        assert!(generate_cohort(&[zero], NoiseSpec::NONE, 0).is_err());
        // every draw leaves the clamp range
        let impossible = ClusterSpec {
            center: [5000.0, 0.0001],
            spread: [1.0, 0.00001],
            ..small_spec(1)
        };
        assert!(matches!(
            generate_cohort(&[impossible], NoiseSpec::NONE, 0),
            Err(Error::Generation(_))
        ));
    }

    #[test]
    fn seed_mixing_spreads() {
        assert_ne!(mix_seed(0, 0), mix_seed(0, 1));
        assert_ne!(mix_seed(0, 0), mix_seed(1, 0));
    }

    #[test]
    fn reference_sizes_and_labels() {
        let cohort = reference_cohort(0).unwrap();
        assert_eq!(cohort.len(), 1210);
        assert!(ada_agreement(&cohort).unwrap() >= 0.9);
        let ngt: Vec<_> = cohort
            .iter()
            .filter(|s| s.intended == Category::Ngt)
            .collect();
        let plausible = ngt
            .iter()
            .filter(|s| s.record.fasting() < 100.0 && s.record.two_hour() < 140.0)
            .count();
        assert!(plausible as f64 >= 0.9 * ngt.len() as f64);
    }
}
