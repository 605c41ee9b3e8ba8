//! Next-step recommendation for an ongoing labeling effort.
//!
//! 1. Below the quality threshold: raise label quality first.
//! 2. Otherwise, while the diversity curve still rises: add diverse volumes.
//! 3. Once diversity saturates: increase completeness.

use serde::{Deserialize, Serialize};

use crate::analysis::{envelope, SaturationParams};
use crate::error::{Error, Result};
use crate::metrics::median;
use crate::runner::AggregatedRow;
use crate::trajectory::{detect_saturation, Virtue};

pub const DEFAULT_QUALITY_THRESHOLD: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    RaiseQuality,
    AddDiverseVolumes,
    IncreaseCompleteness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanState {
    /// Percent.
    pub achieved_quality: f64,
    /// `(diversity, perf_norm)` sorted by diversity, if a sweep was run.
    pub diversity_curve: Option<Vec<(f64, f64)>>,
    pub completeness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanParams {
    pub quality_threshold: f64,
    pub saturation: SaturationParams,
}

impl Default for PlanParams {
    fn default() -> Self {
        Self {
            quality_threshold: DEFAULT_QUALITY_THRESHOLD,
            saturation: SaturationParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub action: Action,
    pub rationale: String,
    pub achieved_quality: f64,
    pub quality_threshold: f64,
    /// Whether the diversity curve was inspected, and where it saturates.
    pub diversity_checked: bool,
    pub diversity_saturation: Option<f64>,
    pub completeness: f64,
}

pub fn recommend_next(state: &PlanState, params: &PlanParams) -> Result<Recommendation> {
    let mut rec = Recommendation {
        action: Action::RaiseQuality,
        rationale: String::new(),
        achieved_quality: state.achieved_quality,
        quality_threshold: params.quality_threshold,
        diversity_checked: false,
        diversity_saturation: None,
        completeness: state.completeness,
    };
    if state.achieved_quality < params.quality_threshold {
        rec.rationale = format!(
            "rule 1: achieved quality {}% is below {}%; segment more slices instead of interpolating",
            state.achieved_quality, params.quality_threshold
        );
        return Ok(rec);
    }
    let curve = state.diversity_curve.as_deref().ok_or_else(|| {
        Error::Invalid(
            "rule 2 needs a diversity sweep: train on the current labels now with a grid of axis \
             `diversity-sweep`, then plan again"
                .into(),
        )
    })?;
    let sat = detect_saturation(curve, params.saturation.epsilon, params.saturation.window)?;
    rec.diversity_checked = true;
    rec.diversity_saturation = sat;
    match sat {
        None => {
            rec.action = Action::AddDiverseVolumes;
            rec.rationale = format!(
                "rule 2: quality {}% meets {}% and performance still rises with diversity; label more volumes",
                state.achieved_quality, params.quality_threshold
            );
        }
        Some(d) => {
            rec.action = Action::IncreaseCompleteness;
            rec.rationale = format!(
                "rule 3: diversity saturates at {d}; add slices per volume, by labeling or by interpolating more"
            );
        }
    }
    Ok(rec)
}

/// Plan state from persisted results alone: median achieved quality of the
/// valid cells, the diversity envelope when at least two diversity values
/// were run, and the largest completeness used.
pub fn state_from_table(rows: &[AggregatedRow]) -> Result<PlanState> {
    let quality: Vec<f64> = rows
        .iter()
        .filter(|r| r.perf_norm.is_some())
        .filter_map(|r| r.quality_achieved)
        .collect();
    let curve = envelope(rows, Virtue::Diversity);
    Ok(PlanState {
        achieved_quality: median(&quality)?,
        diversity_curve: (curve.len() >= 2).then_some(curve),
        completeness: rows.iter().map(|r| r.completeness).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(q: f64, curve: Option<Vec<(f64, f64)>>) -> PlanState {
        PlanState {
            achieved_quality: q,
            diversity_curve: curve,
            completeness: 1.0,
        }
    }

    fn rising() -> Vec<(f64, f64)> {
        vec![(0.2, 0.5), (0.4, 0.7), (0.6, 0.85), (0.8, 0.95), (1.0, 1.0)]
    }

    fn saturated() -> Vec<(f64, f64)> {
        vec![(0.2, 0.5), (0.4, 0.8), (0.6, 0.9), (0.8, 0.905), (1.0, 0.907)]
    }

    #[test]
    fn low_quality_wins_regardless() {
        let p = PlanParams::default();
        assert_eq!(recommend_next(&state(85.0, None), &p).unwrap().action, Action::RaiseQuality);
        let r = recommend_next(&state(75.0, Some(saturated())), &p).unwrap();
        assert_eq!(r.action, Action::RaiseQuality);
        assert!(r.rationale.starts_with("rule 1"));
        assert!(!r.diversity_checked);
    }

    #[test]
    fn diversity_then_completeness() {
        let p = PlanParams::default();
        let r = recommend_next(&state(99.0, Some(rising())), &p).unwrap();
        assert_eq!((r.action, r.diversity_saturation), (Action::AddDiverseVolumes, None));
        let r = recommend_next(&state(99.0, Some(saturated())), &p).unwrap();
        assert_eq!((r.action, r.diversity_saturation), (Action::IncreaseCompleteness, Some(0.6)));
        assert!(r.rationale.starts_with("rule 3"));
        // exactly at the threshold counts as enough quality
        assert_eq!(recommend_next(&state(90.0, Some(rising())), &p).unwrap().action, Action::AddDiverseVolumes);
    }

    #[test]
    fn missing_sweep_asks_for_one() {
        let err = recommend_next(&state(95.0, None), &PlanParams::default()).unwrap_err();
        assert!(err.to_string().contains("diversity-sweep"));
    }

    #[test]
    fn action_names() {
        assert_eq!(serde_json::to_string(&Action::AddDiverseVolumes).unwrap(), "\"add_diverse_volumes\"");
    }
}
