//! Ackerman's closed-form glucose curve and the quantities derived from it.
//!
//! Units are fixed throughout the crate: time in minutes, concentration in
//! mg/dl (1 mmol/l of glucose is about 18 mg/dl).

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling times of a standard 2 h OGTT, minutes.
pub const SAMPLE_TIMES: [f64; 5] = [0.0, 30.0, 60.0, 90.0, 120.0];

/// Upper sanity bound on a measured concentration, mg/dl.
pub const MAX_CONCENTRATION: f64 = 1000.0;

/// Parameters of `G(t) = g0 + a·exp(-alpha·t)·cos(omega·t - delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AckermanParams {
    /// Baseline concentration, mg/dl.
    pub g0: f64,
    /// Peak glucose concentration amplitude, mg/dl.
    pub a: f64,
    /// Mean glucose removal rate, 1/min.
    pub alpha: f64,
    /// Angular frequency, rad/min.
    pub omega: f64,
    /// Phase, rad, kept in `[-π, π)`.
    pub delta: f64,
}

impl AckermanParams {
    /// Validated constructor; `delta` is wrapped into `[-π, π)`.
    pub fn new(g0: f64, a: f64, alpha: f64, omega: f64, delta: f64) -> Result<Self> {
        let params = Self {
            g0,
            a,
            alpha,
            omega,
            delta: normalize_phase(delta),
        };
        params.check_finite()?;
        if !(g0 > 0.0 && a > 0.0 && alpha > 0.0 && omega > 0.0) {
            return Err(Error::Parameter(format!(
                "g0, a, alpha and omega must be positive, got {params:?}"
            )));
        }
        Ok(params)
    }

    fn check_finite(&self) -> Result<()> {
        let all = [self.g0, self.a, self.alpha, self.omega, self.delta];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "non-finite parameter in {self:?}"
            )))
        }
    }

    /// Checks the invariants needed to evaluate the curve. A zero amplitude is
    /// tolerated here (flat curve) even though [`AckermanParams::new`] rejects it.
    pub fn validate(&self) -> Result<()> {
        self.check_finite()?;
        if self.g0 > 0.0 && self.a >= 0.0 && self.alpha > 0.0 && self.omega > 0.0 {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "g0, alpha and omega must be positive and a non-negative, got {self:?}"
            )))
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.g0, self.a, self.alpha, self.omega, self.delta]
    }

    /// Curve value without validation; callers have already validated.
    #[inline]
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        self.g0 + self.a * (-self.alpha * t).exp() * (self.omega * t - self.delta).cos()
    }
}

/// Wraps a phase into `[-π, π)`.
pub fn normalize_phase(delta: f64) -> f64 {
    if (-PI..PI).contains(&delta) {
        return delta;
    }
    let wrapped = (delta + PI).rem_euclid(TAU) - PI;
    // rem_euclid may round up to TAU for tiny negative inputs
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Sex {
    F,
    M,
    #[default]
    #[serde(rename = "")]
    Unspecified,
}

impl Sex {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sex::F => "F",
            Sex::M => "M",
            Sex::Unspecified => "",
        }
    }
}

impl std::str::FromStr for Sex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "F" | "f" => Ok(Sex::F),
            "M" | "m" => Ok(Sex::M),
            "" | "U" | "u" => Ok(Sex::Unspecified),
            other => Err(Error::Input(format!("unknown sex `{other}`"))),
        }
    }
}

/// One subject's OGTT: glucose at minutes 0, 30, 60, 90 and 120.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OgttRecord {
    pub patient_id: String,
    pub sex: Sex,
    pub age: Option<u32>,
    /// mg/dl at [`SAMPLE_TIMES`].
    pub g: [f64; 5],
    /// Chronological key for repeat tests of the same patient.
    pub seq: Option<i64>,
}

impl OgttRecord {
    pub fn new(patient_id: impl Into<String>, g: [f64; 5]) -> Result<Self> {
        let record = Self {
            patient_id: patient_id.into(),
            sex: Sex::Unspecified,
            age: None,
            g,
            seq: None,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn with_sex(mut self, sex: Sex) -> Self {
        self.sex = sex;
        self
    }

    pub fn with_age(mut self, age: Option<u32>) -> Self {
        self.age = age;
        self
    }

    pub fn with_seq(mut self, seq: Option<i64>) -> Self {
        self.seq = seq;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (value, t) in self.g.iter().zip(SAMPLE_TIMES) {
            check_concentration(*value).map_err(|msg| {
                Error::Input(format!(
                    "record `{}`, g{}: {msg}",
                    self.patient_id, t as u32
                ))
            })?;
        }
        Ok(())
    }

    /// Fasting concentration, minute 0.
    pub fn fasting(&self) -> f64 {
        self.g[0]
    }

    /// Two-hour post-load concentration, minute 120.
    pub fn two_hour(&self) -> f64 {
        self.g[4]
    }

    /// `|G90 - G120|`, the curve-shape quantity used by the applicability rules.
    pub fn late_drop(&self) -> f64 {
        (self.g[3] - self.g[4]).abs()
    }
}

pub(crate) fn check_concentration(value: f64) -> std::result::Result<(), String> {
    if !value.is_finite() {
        Err(format!("{value} is not finite"))
    } else if value <= 0.0 {
        Err(format!("{value} must be strictly positive"))
    } else if value >= MAX_CONCENTRATION {
        Err(format!(
            "{value} exceeds the {MAX_CONCENTRATION} mg/dl sanity bound"
        ))
    } else {
        Ok(())
    }
}

/// Curve value at `t` minutes.
pub fn evaluate(params: &AckermanParams, t: f64) -> Result<f64> {
    params.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Parameter(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    Ok(params.value_at(t))
}

/// Curve values at the five OGTT sample times.
pub fn predict_at_sample_times(params: &AckermanParams) -> Result<[f64; 5]> {
    params.validate()?;
    Ok(SAMPLE_TIMES.map(|t| params.value_at(t)))
}

/// Signed residuals `G_i - G_i^pred`.
pub fn residuals(record: &OgttRecord, params: &AckermanParams) -> Result<[f64; 5]> {
    let pred = predict_at_sample_times(params)?;
    Ok(std::array::from_fn(|i| record.g[i] - pred[i]))
}

/// Mean absolute deviation between the record and the curve over the five
/// sample times.
pub fn error_abs(record: &OgttRecord, params: &AckermanParams) -> Result<f64> {
    record.validate()?;
    Ok(mean_abs(&residuals(record, params)?))
}

pub(crate) fn mean_abs(residuals: &[f64; 5]) -> f64 {
    residuals.iter().map(|r| r.abs()).sum::<f64>() / 5.0
}

/// Oscillation period `2π/ω`, minutes.
pub fn period(params: &AckermanParams) -> Result<f64> {
    if !(params.omega > 0.0 && params.omega.is_finite()) {
        return Err(Error::Parameter(format!(
            "omega must be positive and finite, got {}",
            params.omega
        )));
    }
    Ok(TAU / params.omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> AckermanParams {
        AckermanParams::new(90.0, 60.0, 0.02, 0.05, 0.0).unwrap()
    }

    #[test]
    fn evaluate_at_zero_with_zero_phase() {
        assert_eq!(evaluate(&base(), 0.0).unwrap(), 150.0);
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let flat = AckermanParams { a: 0.0, ..base() };
        for t in [0.0, 17.0, 60.0, 120.0, 500.0] {
            assert_eq!(evaluate(&flat, t).unwrap(), 90.0);
        }
        assert!(AckermanParams::new(90.0, 0.0, 0.02, 0.05, 0.0).is_err());
    }

    #[test]
    fn evaluate_with_phase() {
        let p = AckermanParams::new(90.0, 60.0, 0.02, 0.05, 1.0).unwrap();
        // 90 + 60·cos(-1) computed by hand: cos(1) = 0.5403023058681398
        assert!((evaluate(&p, 0.0).unwrap() - 122.41813835208839).abs() < 1e-12);
    }

    #[test]
    fn sample_time_predictions() {
        let pred = predict_at_sample_times(&base()).unwrap();
        assert_eq!(pred[0], 150.0);

        // independent scalar evaluation of the closed form for δ = 1
        let p = AckermanParams::new(90.0, 60.0, 0.02, 0.05, 1.0).unwrap();
        let pred = predict_at_sample_times(&p).unwrap();
        let expected = [
            122.41813835208839,
            90.0 + 60.0 * (-0.6f64).exp() * (0.5f64).cos(),
            90.0 + 60.0 * (-1.2f64).exp() * (2.0f64).cos(),
            90.0 + 60.0 * (-1.8f64).exp() * (3.5f64).cos(),
            90.0 + 60.0 * (-2.4f64).exp() * (5.0f64).cos(),
        ];
        for (got, want) in pred.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = AckermanParams {
            alpha: -0.1,
            ..base()
        };
        assert!(matches!(evaluate(&bad, 1.0), Err(Error::Parameter(_))));
        let nan = AckermanParams {
            g0: f64::NAN,
            ..base()
        };
        assert!(evaluate(&nan, 1.0).is_err());
        assert!(evaluate(&base(), -1.0).is_err());
    }

    #[test]
    fn error_abs_cases() {
        let p = base();
        let pred = predict_at_sample_times(&p).unwrap();
        let exact = OgttRecord::new("x", pred).unwrap();
        assert_eq!(error_abs(&exact, &p).unwrap(), 0.0);

        let shifted = OgttRecord::new("x", pred.map(|v| v + 5.0)).unwrap();
        assert!((error_abs(&shifted, &p).unwrap() - 5.0).abs() < 1e-12);

        let offsets = [0.0, 5.0, -10.0, 5.0, 0.0];
        let g = std::array::from_fn(|i| pred[i] + offsets[i]);
        let rec = OgttRecord::new("x", g).unwrap();
        assert!((error_abs(&rec, &p).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn period_values() {
        let at = |omega| period(&AckermanParams { omega, ..base() }).unwrap();
        assert!((at(0.09) - 69.813_170_079_773_18).abs() < 1e-9);
        assert_eq!(at(0.09).round(), 70.0);
        assert!((at(TAU) - 1.0).abs() < 1e-15);
        assert!((at(PI) - 2.0).abs() < 1e-15);
        assert!(period(&AckermanParams {
            omega: 0.0,
            ..base()
        })
        .is_err());
        assert!(period(&AckermanParams {
            omega: -1.0,
            ..base()
        })
        .is_err());
    }

    #[test]
    fn omega_period_boundary() {
        let threshold = TAU / 0.09;
        let at = AckermanParams {
            omega: 0.09,
            ..base()
        };
        assert!(at.omega >= 0.09);
        assert!(period(&at).unwrap() <= threshold);
        for omega in [0.09 - 1e-12, 0.09 + 1e-12] {
            let near = AckermanParams { omega, ..base() };
            assert_eq!(near.omega < 0.09, period(&near).unwrap() > threshold);
        }
    }

    #[test]
    fn phase_normalization() {
        assert_eq!(normalize_phase(0.5), 0.5);
        assert_eq!(normalize_phase(-PI), -PI);
        assert!((normalize_phase(PI) + PI).abs() < 1e-15);
        assert!((normalize_phase(3.0 * PI + 0.25) - (-PI + 0.25)).abs() < 1e-12);
        assert!((normalize_phase(-TAU - 0.5) - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn record_validation() {
        assert!(OgttRecord::new("a", [90.0, 150.0, 140.0, 120.0, 100.0]).is_ok());
        assert!(OgttRecord::new("a", [90.0, 150.0, 140.0, 120.0, 0.0]).is_err());
        assert!(OgttRecord::new("a", [90.0, f64::INFINITY, 140.0, 120.0, 1.0]).is_err());
        assert!(OgttRecord::new("a", [90.0, 1000.0, 140.0, 120.0, 1.0]).is_err());
    }

    fn params_strategy() -> impl Strategy<Value = AckermanParams> {
        (
            20.0..200.0f64,
            0.1..400.0f64,
            0.0005..0.2f64,
            0.001..0.5f64,
            -10.0..10.0f64,
        )
            .prop_map(|(g0, a, alpha, omega, delta)| {
                AckermanParams::new(g0, a, alpha, omega, delta).unwrap()
            })
    }

    proptest! {
        #[test]
        fn value_at_zero(p in params_strategy()) {
            let v = evaluate(&p, 0.0).unwrap();
            prop_assert!((v - (p.g0 + p.a * p.delta.cos())).abs() <= 1e-9 * v.abs().max(1.0));
        }

        #[test]
        fn envelope_bound(p in params_strategy(), t in 0.0..600.0f64) {
            let v = evaluate(&p, t).unwrap();
            prop_assert!((v - p.g0).abs() <= p.a * (-p.alpha * t).exp() * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn predictions_match_scalar(p in params_strategy()) {
            let pred = predict_at_sample_times(&p).unwrap();
            for (i, t) in SAMPLE_TIMES.iter().enumerate() {
                prop_assert_eq!(pred[i], evaluate(&p, *t).unwrap());
            }
        }

        #[test]
        fn delta_is_normalized(p in params_strategy()) {
            prop_assert!((-PI..PI).contains(&p.delta));
        }

        #[test]
        fn period_decreasing(p in params_strategy(), bump in 1e-6..1.0f64) {
            let faster = AckermanParams { omega: p.omega + bump, ..p };
            prop_assert!(period(&faster).unwrap() < period(&p).unwrap());
        }

        #[test]
        fn error_abs_zero_iff_exact(p in params_strategy(), k in 0usize..5, off in 1e-6..50.0f64) {
            let pred = predict_at_sample_times(&p).unwrap();
            prop_assume!(pred.iter().all(|v| *v > 0.0 && *v + 50.0 < MAX_CONCENTRATION));
            let exact = OgttRecord::new("p", pred).unwrap();
            prop_assert!(error_abs(&exact, &p).unwrap() <= 1e-9);
            let mut g = pred;
            g[k] += off;
            let moved = OgttRecord::new("p", g).unwrap();
            prop_assert!(error_abs(&moved, &p).unwrap() > 1e-9 / 5.0);
        }
    }
}
