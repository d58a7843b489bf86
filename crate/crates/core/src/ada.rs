//! ADA glycemic categories from fasting and two-hour glucose.
//!
//! Thresholds (mg/dl): T2DM when fasting >= 126 or two-hour >= 200; IFG when
//! fasting is 100-125; IGT when two-hour is 140-199. Comparisons are on real
//! values, so the upper edges are `< 126` and `< 200`, which agrees with the
//! inclusive integer ranges 100-125 and 140-199.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OgttRecord;

pub const T2DM_FASTING: f64 = 126.0;
pub const T2DM_TWO_HOUR: f64 = 200.0;
pub const IFG_FASTING: f64 = 100.0;
pub const IGT_TWO_HOUR: f64 = 140.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "NGT")]
    Ngt,
    #[serde(rename = "IFG")]
    Ifg,
    #[serde(rename = "IGT")]
    Igt,
    #[serde(rename = "IFG-IGT")]
    IfgIgt,
    #[serde(rename = "T2DM")]
    T2dm,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Ngt,
        Category::Ifg,
        Category::Igt,
        Category::IfgIgt,
        Category::T2dm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Ngt => "NGT",
            Category::Ifg => "IFG",
            Category::Igt => "IGT",
            Category::IfgIgt => "IFG-IGT",
            Category::T2dm => "T2DM",
        }
    }

    pub fn binary(&self) -> BinaryLabel {
        if *self == Category::Ngt {
            BinaryLabel::Normoglycemic
        } else {
            BinaryLabel::Dysglycemic
        }
    }

    /// Rank in the partial order NGT < {IFG, IGT} < IFG-IGT < T2DM.
    pub fn severity(&self) -> u8 {
        match self {
            Category::Ngt => 0,
            Category::Ifg | Category::Igt => 1,
            Category::IfgIgt => 2,
            Category::T2dm => 3,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "NGT" => Ok(Category::Ngt),
            "IFG" => Ok(Category::Ifg),
            "IGT" => Ok(Category::Igt),
            "IFG-IGT" | "IGT-IFG" => Ok(Category::IfgIgt),
            "T2DM" | "DMT2" => Ok(Category::T2dm),
            other => Err(Error::Input(format!("unknown category `{other}`"))),
        }
    }
}

/// Binary class used by the linear separator: normoglycemic is +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum BinaryLabel {
    Normoglycemic,
    Dysglycemic,
}

impl BinaryLabel {
    pub fn sign(&self) -> f64 {
        match self {
            BinaryLabel::Normoglycemic => 1.0,
            BinaryLabel::Dysglycemic => -1.0,
        }
    }

    /// `sign(0)` is +1.
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            BinaryLabel::Normoglycemic
        } else {
            BinaryLabel::Dysglycemic
        }
    }
}

impl From<BinaryLabel> for i8 {
    fn from(label: BinaryLabel) -> i8 {
        match label {
            BinaryLabel::Normoglycemic => 1,
            BinaryLabel::Dysglycemic => -1,
        }
    }
}

impl TryFrom<i8> for BinaryLabel {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(BinaryLabel::Normoglycemic),
            -1 => Ok(BinaryLabel::Dysglycemic),
            other => Err(format!("binary label must be +1 or -1, got {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdaLabel {
    pub category: Category,
    pub binary: BinaryLabel,
}

impl From<Category> for AdaLabel {
    fn from(category: Category) -> Self {
        Self {
            category,
            binary: category.binary(),
        }
    }
}

pub fn classify_ada(fasting: f64, two_hour: f64) -> Result<AdaLabel> {
    for (name, v) in [("fasting", fasting), ("two-hour", two_hour)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Input(format!(
                "{name} glucose must be positive and finite, got {v}"
            )));
        }
    }
    let ifg = (IFG_FASTING..T2DM_FASTING).contains(&fasting);
    let igt = (IGT_TWO_HOUR..T2DM_TWO_HOUR).contains(&two_hour);
    let category = if fasting >= T2DM_FASTING || two_hour >= T2DM_TWO_HOUR {
        Category::T2dm
    } else if ifg && igt {
        Category::IfgIgt
    } else if ifg {
        Category::Ifg
    } else if igt {
        Category::Igt
    } else {
        Category::Ngt
    };
    Ok(category.into())
}

/// Labels a record from its minute-0 and minute-120 values only.
pub fn classify_record(record: &OgttRecord) -> Result<AdaLabel> {
    classify_ada(record.fasting(), record.two_hour())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(f: f64, h: f64) -> Category {
        classify_ada(f, h).unwrap().category
    }

    #[test]
    fn documented_examples() {
        assert_eq!(cat(126.0, 150.0), Category::T2dm);
        assert_eq!(cat(110.0, 150.0), Category::IfgIgt);
        assert_eq!(cat(95.0, 120.0), Category::Ngt);
        assert_eq!(cat(100.0, 139.0), Category::Ifg);
        assert_eq!(cat(99.0, 140.0), Category::Igt);
    }

    #[test]
    fn record_uses_endpoints_only() {
        let r = OgttRecord::new("a", [126.0, 150.0, 150.0, 150.0, 100.0]).unwrap();
        assert_eq!(classify_record(&r).unwrap().category, Category::T2dm);
        let r = OgttRecord::new("b", [90.0, 180.0, 160.0, 130.0, 120.0]).unwrap();
        assert_eq!(classify_record(&r).unwrap().category, Category::Ngt);
        let r = OgttRecord::new("c", [105.0, 150.0, 150.0, 150.0, 210.0]).unwrap();
        assert_eq!(classify_record(&r).unwrap().category, Category::T2dm);
    }

    #[test]
    fn non_integer_values_between_thresholds() {
        assert_eq!(cat(125.5, 100.0), Category::Ifg);
        assert_eq!(cat(90.0, 199.5), Category::Igt);
        assert_eq!(cat(99.999, 139.999), Category::Ngt);
    }

    #[test]
    fn invalid_inputs() {
        assert!(classify_ada(0.0, 100.0).is_err());
        assert!(classify_ada(100.0, -1.0).is_err());
        assert!(classify_ada(f64::NAN, 100.0).is_err());
        assert!(classify_ada(100.0, f64::INFINITY).is_err());
    }

    #[test]
    fn binary_follows_category() {
        for c in Category::ALL {
            let label = AdaLabel::from(c);
            assert_eq!(
                label.binary == BinaryLabel::Normoglycemic,
                c == Category::Ngt
            );
        }
    }

    #[test]
    fn monotone_on_grid() {
        for f in 50..=400 {
            for h in 50..=400 {
                let here = cat(f as f64, h as f64).severity();
                assert!(cat(f as f64 + 1.0, h as f64).severity() >= here);
                assert!(cat(f as f64, h as f64 + 1.0).severity() >= here);
            }
        }
    }

    #[test]
    fn serde_names() {
        assert_eq!(
            serde_json::to_string(&Category::IfgIgt).unwrap(),
            "\"IFG-IGT\""
        );
        assert_eq!(
            serde_json::to_string(&BinaryLabel::Dysglycemic).unwrap(),
            "-1"
        );
        for c in Category::ALL {
            assert_eq!(c.as_str().parse::<Category>().unwrap(), c);
        }
    }
}
