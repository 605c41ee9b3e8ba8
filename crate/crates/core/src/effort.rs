//! Labeling effort proxies. Both are fractions in `[0, 1]`; percent
//! formatting belongs to the presentation layer.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::virtue::{check_fraction, check_percent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffortAxis {
    /// volumes used × label quality
    QualityDiversity,
    /// volumes used × slices used per volume
    DiversityCompleteness,
}

impl EffortAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            EffortAxis::QualityDiversity => "qd",
            EffortAxis::DiversityCompleteness => "dc",
        }
    }
}

impl std::str::FromStr for EffortAxis {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qd" | "quality-diversity" => Ok(EffortAxis::QualityDiversity),
            "dc" | "diversity-completeness" => Ok(EffortAxis::DiversityCompleteness),
            other => Err(crate::error::Error::Invalid(format!(
                "unknown effort axis `{other}`, expected qd or dc"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffortPoint {
    pub effort: f64,
    pub axis: EffortAxis,
    pub diversity: f64,
    pub completeness: f64,
    pub quality_pct: f64,
}

/// Portion of volumes times quality: `diversity · quality_pct / 100`.
pub fn effort_qd(diversity: f64, quality_pct: f64) -> Result<f64> {
    check_fraction("diversity", diversity)?;
    check_percent(quality_pct)?;
    // multiply first: (0.1 * 80) / 100 is exactly 0.08, 0.1 * (80 / 100) is not
    Ok(diversity * quality_pct / 100.0)
}

/// Total share of slices segmented: `diversity · completeness`.
pub fn effort_dc(diversity: f64, completeness: f64) -> Result<f64> {
    check_fraction("diversity", diversity)?;
    check_fraction("completeness", completeness)?;
    Ok(diversity * completeness)
}

impl EffortPoint {
    pub fn new(axis: EffortAxis, diversity: f64, completeness: f64, quality_pct: f64) -> Result<Self> {
        let effort = match axis {
            EffortAxis::QualityDiversity => effort_qd(diversity, quality_pct)?,
            EffortAxis::DiversityCompleteness => effort_dc(diversity, completeness)?,
        };
        Ok(Self {
            effort,
            axis,
            diversity,
            completeness,
            quality_pct,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(effort_qd(0.1, 80.0).unwrap(), 0.08);
        assert_eq!(effort_qd(1.0, 100.0).unwrap(), 1.0);
        assert_eq!(effort_qd(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(effort_dc(0.6, 0.1).unwrap(), 0.06);
        assert_eq!(effort_dc(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(effort_dc(0.25, 0.5).unwrap(), 0.125);
    }

    #[test]
    fn domain_violations() {
        assert!(effort_qd(0.0, 50.0).is_err());
        assert!(effort_qd(0.5, 100.5).is_err());
        assert!(effort_dc(0.5, 1.5).is_err());
        assert!(effort_dc(f64::NAN, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(d1 in 0.001f64..=1.0, d2 in 0.001f64..=1.0, c in 0.001f64..=1.0, q in 0.0f64..=100.0) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(effort_qd(lo, q).unwrap() <= effort_qd(hi, q).unwrap());
            prop_assert!(effort_dc(lo, c).unwrap() <= effort_dc(hi, c).unwrap());
            prop_assert_eq!(effort_dc(d1, c).unwrap(), effort_dc(c, d1).unwrap());
            let e = effort_qd(d1, q).unwrap();
            prop_assert!((0.0..=1.0).contains(&e));
        }
    }
}
